//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hurst spec: {0}")]
    InvalidHurst(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("covariance factorization failed in dimension {dimension}: {detail}")]
    Factorization { dimension: usize, detail: String },

    #[error("truncation domain breach: {0}")]
    TruncationDomain(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("estimator failure in {op}: {detail}")]
    Estimator { op: String, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn estimator(op: &str, detail: impl Into<String>) -> Self {
        Error::Estimator {
            op: op.to_string(),
            detail: detail.into(),
        }
    }
}
