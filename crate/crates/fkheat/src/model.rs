//! Parameter objects, admissibility validation, and derived constants.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Which parameter regime a Hurst vector lives in.
///
/// The regime is declared by the caller rather than inferred from a
/// floating-point comparison with 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// All spatial indices above 1/2 and `2 H0 + sum H_i > d + 1`.
    Regular,
    /// `d = 1`, `H1 = 1/2`, `H0 > 3/4`.
    SpecialD1,
}

/// Hurst parameter vector `(H0, H1, ..., Hd)` with its declared regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstSpec {
    pub d: usize,
    pub h0: f64,
    pub h: Vec<f64>,
    pub regime: Regime,
}

/// Outcome of admissibility validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub admissible: bool,
    /// `2 H0 + sum H_i - d - 1`, reported whenever all indices are in (0,1).
    pub kappa: Option<f64>,
    /// `prod_i H_i (2 H_i - 1)` over i = 0..d (Regular regime), or
    /// `H0 (2 H0 - 1)` alone (SpecialD1).
    pub alpha_h: Option<f64>,
    /// Name of the violated condition when not admissible.
    pub violation: Option<String>,
}

impl HurstSpec {
    /// Build a Regular-regime spec. Returns an error when not admissible.
    pub fn regular(h0: f64, h: &[f64]) -> Result<Self> {
        let spec = HurstSpec {
            d: h.len(),
            h0,
            h: h.to_vec(),
            regime: Regime::Regular,
        };
        let report = spec.validate();
        if report.admissible {
            Ok(spec)
        } else {
            Err(Error::InvalidHurst(report.violation.unwrap_or_default()))
        }
    }

    /// Build the `d = 1`, `H1 = 1/2` special-case spec.
    pub fn special_d1(h0: f64) -> Result<Self> {
        let spec = HurstSpec {
            d: 1,
            h0,
            h: vec![0.5],
            regime: Regime::SpecialD1,
        };
        let report = spec.validate();
        if report.admissible {
            Ok(spec)
        } else {
            Err(Error::InvalidHurst(report.violation.unwrap_or_default()))
        }
    }

    /// `kappa = 2 H0 + sum H_i - d - 1`.
    pub fn kappa(&self) -> f64 {
        2.0 * self.h0 + self.h.iter().sum::<f64>() - self.d as f64 - 1.0
    }

    /// `alpha_H = prod_{i=0..d} H_i (2 H_i - 1)` in the Regular regime;
    /// `alpha_{H0} = H0 (2 H0 - 1)` in SpecialD1.
    pub fn alpha_h(&self) -> f64 {
        match self.regime {
            Regime::Regular => {
                let mut a = self.h0 * (2.0 * self.h0 - 1.0);
                for &hi in &self.h {
                    a *= hi * (2.0 * hi - 1.0);
                }
                a
            }
            Regime::SpecialD1 => self.h0 * (2.0 * self.h0 - 1.0),
        }
    }

    /// `alpha_{H0} = H0 (2 H0 - 1)`.
    pub fn alpha_h0(&self) -> f64 {
        self.h0 * (2.0 * self.h0 - 1.0)
    }

    /// Spatial kernel exponents `2 H_i - 2`.
    pub fn space_exponents(&self) -> Vec<f64> {
        self.h.iter().map(|hi| 2.0 * hi - 2.0).collect()
    }

    /// Time kernel exponent `2 H0 - 2`.
    pub fn time_exponent(&self) -> f64 {
        2.0 * self.h0 - 2.0
    }

    /// Admissibility check. Pure: identical inputs give identical reports.
    pub fn validate(&self) -> ValidationReport {
        let all = std::iter::once(self.h0).chain(self.h.iter().copied());
        for v in all {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return ValidationReport {
                    admissible: false,
                    kappa: None,
                    alpha_h: None,
                    violation: Some("index out of (0,1)".to_string()),
                };
            }
        }
        if self.d == 0 || self.h.len() != self.d {
            return ValidationReport {
                admissible: false,
                kappa: None,
                alpha_h: None,
                violation: Some("spatial index count must equal d >= 1".to_string()),
            };
        }
        let kappa = self.kappa();
        match self.regime {
            Regime::Regular => {
                if self.h0 < 0.5 {
                    return self.reject(kappa, "H0 >= 1/2 violated");
                }
                if self.h.iter().any(|&hi| hi <= 0.5) {
                    return self.reject(kappa, "H_i > 1/2 violated");
                }
                if kappa <= 0.0 {
                    return self.reject(kappa, "2 H0 + sum H_i > d + 1 violated (kappa <= 0)");
                }
                ValidationReport {
                    admissible: true,
                    kappa: Some(kappa),
                    alpha_h: Some(self.alpha_h()),
                    violation: None,
                }
            }
            Regime::SpecialD1 => {
                if self.d != 1 {
                    return self.reject(kappa, "SpecialD1 requires d = 1");
                }
                if self.h[0] != 0.5 {
                    return self.reject(kappa, "SpecialD1 requires H1 = 1/2");
                }
                if self.h0 <= 0.75 {
                    return self.reject(kappa, "SpecialD1 requires H0 > 3/4");
                }
                ValidationReport {
                    admissible: true,
                    kappa: Some(kappa),
                    alpha_h: Some(self.alpha_h0()),
                    violation: None,
                }
            }
        }
    }

    fn reject(&self, kappa: f64, why: &str) -> ValidationReport {
        ValidationReport {
            admissible: false,
            kappa: Some(kappa),
            alpha_h: None,
            violation: Some(why.to_string()),
        }
    }
}

/// Validate a spec and report derived constants.
pub fn validate(spec: &HurstSpec) -> ValidationReport {
    spec.validate()
}

// ---------------------------------------------------------------------------
// Time grids
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Uniform,
    Dyadic { level: u32 },
}

/// Partition of `[0, t_max]` into `n` subintervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n: usize,
    pub kind: GridKind,
}

impl TimeGrid {
    pub fn uniform(t_max: f64, n: usize) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::DegenerateGrid(format!("t_max = {t_max} must be > 0")));
        }
        if n == 0 {
            return Err(Error::DegenerateGrid("n = 0 subintervals".to_string()));
        }
        Ok(TimeGrid {
            t_max,
            n,
            kind: GridKind::Uniform,
        })
    }

    pub fn dyadic(t_max: f64, level: u32) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::DegenerateGrid(format!("t_max = {t_max} must be > 0")));
        }
        if level > 24 {
            return Err(Error::DegenerateGrid(format!("dyadic level {level} too deep")));
        }
        Ok(TimeGrid {
            t_max,
            n: 1usize << level,
            kind: GridKind::Dyadic { level },
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n);
        if i == self.n {
            self.t_max
        } else {
            self.t_max * i as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n as f64
    }
}

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

/// Bounded initial conditions with closed-form heat semigroup images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    Constant { value: f64 },
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// Indicator of the box `prod_i [lo_i, hi_i]`.
    Indicator { lo: Vec<f64>, hi: Vec<f64> },
    /// `cos(k . x)`.
    Cosine { wavevector: Vec<f64> },
}

impl InitialCondition {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialCondition::Constant { value } => *value,
            InitialCondition::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let q: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                amplitude * (-q / (2.0 * width * width)).exp()
            }
            InitialCondition::Indicator { lo, hi } => {
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(xi, (l, h))| *l <= *xi && *xi <= *h);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            InitialCondition::Cosine { wavevector } => {
                let dot: f64 = x.iter().zip(wavevector).map(|(a, b)| a * b).sum();
                dot.cos()
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            InitialCondition::Constant { value } => value.abs(),
            InitialCondition::GaussianBump { amplitude, .. } => amplitude.abs(),
            InitialCondition::Indicator { .. } => 1.0,
            InitialCondition::Cosine { .. } => 1.0,
        }
    }

    /// Heat semigroup image `p_t f(x)`; `t = 0` returns `f(x)`.
    pub fn heat_image(&self, t: f64, x: &[f64]) -> f64 {
        assert!(t >= 0.0);
        if t == 0.0 {
            return self.eval(x);
        }
        match self {
            InitialCondition::Constant { value } => *value,
            InitialCondition::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let w2 = width * width;
                let s2 = w2 + t;
                let q: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                amplitude * (w2 / s2).powf(x.len() as f64 / 2.0) * (-q / (2.0 * s2)).exp()
            }
            InitialCondition::Indicator { lo, hi } => {
                use statrs::function::erf::erf;
                let s = (2.0 * t).sqrt();
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(xi, (l, h))| 0.5 * (erf((h - xi) / s) - erf((l - xi) / s)))
                    .product()
            }
            InitialCondition::Cosine { wavevector } => {
                let k2: f64 = wavevector.iter().map(|k| k * k).sum();
                let dot: f64 = x.iter().zip(wavevector).map(|(a, b)| a * b).sum();
                (-k2 * t / 2.0).exp() * dot.cos()
            }
        }
    }
}

/// Shared Monte Carlo budget: replicate count, base seed, and the time-grid
/// resolution used for path quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: u64,
    pub seed: u64,
    pub grid_n: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replicates: 10_000,
            seed: 1,
            grid_n: 256,
        }
    }
}

// ---------------------------------------------------------------------------
// Estimator results
// ---------------------------------------------------------------------------

/// Monte Carlo estimate with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Free-form tags: stream tag, clip counters, proposal descriptions, ...
    pub meta: BTreeMap<String, String>,
}

impl EstimatorResult {
    /// Summarize per-replicate values.
    pub fn from_samples(values: &[f64], seed: u64, tag: &str) -> Self {
        let (mean, se) = crate::stats::mean_stderr(values);
        let mut meta = BTreeMap::new();
        meta.insert("stream_tag".to_string(), tag.to_string());
        EstimatorResult {
            value: mean,
            std_error: se,
            n_samples: values.len() as u64,
            seed,
            meta,
        }
    }

    pub fn exact(value: f64, seed: u64, tag: &str) -> Self {
        let mut meta = BTreeMap::new();
        meta.insert("stream_tag".to_string(), tag.to_string());
        meta.insert("deterministic".to_string(), "true".to_string());
        EstimatorResult {
            value,
            std_error: 0.0,
            n_samples: 1,
            seed,
            meta,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn clip_count(&self) -> u64 {
        self.meta
            .get("clip_count")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, h0: f64, h: &[f64]) -> HurstSpec {
        HurstSpec {
            d,
            h0,
            h: h.to_vec(),
            regime: Regime::Regular,
        }
    }

    #[test]
    fn admissible_example_d2() {
        let r = spec(2, 0.9, &[0.8, 0.8]).validate();
        assert!(r.admissible);
        assert!((r.kappa.unwrap() - 0.4).abs() < 1e-12);
        let expect = 0.9 * 0.8 * 0.8 * 0.6 * 0.8 * 0.6;
        assert!((r.alpha_h.unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn kappa_boundary_rejected() {
        // 2*0.5 + 1.0 = d + 1 exactly: kappa = 0 must be rejected
        let r = spec(1, 0.5, &[1.0 - 1e-12]).validate();
        assert!(!r.admissible);
    }

    #[test]
    fn special_d1_examples() {
        let ok = HurstSpec::special_d1(0.8).unwrap();
        let r = ok.validate();
        assert!(r.admissible);
        assert!((r.alpha_h.unwrap() - 0.48).abs() < 1e-12);

        assert!(HurstSpec::special_d1(0.75).is_err());
        assert!(HurstSpec::special_d1(0.74).is_err());
    }

    #[test]
    fn d3_example_rejected() {
        let r = spec(3, 0.6, &[0.6, 0.6, 0.6]).validate();
        assert!(!r.admissible);
        assert!(r
            .violation
            .as_deref()
            .unwrap()
            .contains("2 H0 + sum H_i > d + 1"));
    }

    #[test]
    fn out_of_range_index_named() {
        let r = spec(1, 1.2, &[0.9]).validate();
        assert_eq!(r.violation.as_deref(), Some("index out of (0,1)"));
        let r = spec(1, f64::NAN, &[0.9]).validate();
        assert_eq!(r.violation.as_deref(), Some("index out of (0,1)"));
    }

    #[test]
    fn validate_is_pure() {
        let s = spec(2, 0.9, &[0.8, 0.8]);
        let a = s.validate();
        let b = s.validate();
        assert_eq!(a.admissible, b.admissible);
        assert_eq!(a.kappa, b.kappa);
        assert_eq!(a.alpha_h, b.alpha_h);
    }

    #[test]
    fn grid_invariants() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        assert_eq!(g.n, 16);
        let nodes = g.nodes();
        assert_eq!(nodes[0], 0.0);
        assert_eq!(*nodes.last().unwrap(), 1.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        assert!(TimeGrid::uniform(0.0, 4).is_err());
    }

    #[test]
    fn heat_image_closed_forms() {
        let c = InitialCondition::Constant { value: 3.0 };
        assert_eq!(c.heat_image(0.7, &[1.0, -2.0]), 3.0);

        let g = InitialCondition::GaussianBump {
            center: vec![0.5],
            width: 0.3,
            amplitude: 2.0,
        };
        // p_t of a Gaussian is a Gaussian with variance w^2 + t
        let v = g.heat_image(0.16, &[0.5]);
        let expect = 2.0 * (0.09f64 / 0.25).sqrt();
        assert!((v - expect).abs() < 1e-12);

        let cos = InitialCondition::Cosine {
            wavevector: vec![2.0],
        };
        let v = cos.heat_image(0.5, &[0.3]);
        assert!((v - (-1.0f64).exp() * (0.6f64).cos()).abs() < 1e-12);
    }

    #[test]
    fn indicator_heat_image_matches_quadrature() {
        let f = InitialCondition::Indicator {
            lo: vec![-1.0],
            hi: vec![0.5],
        };
        let t = 0.3;
        let x = [0.2];
        let quad = crate::quad::integrate_gl(
            |y| crate::quad::normal_pdf(x[0] - y, t) * f.eval(&[y]),
            -1.0,
            0.5,
            16,
        );
        assert!((f.heat_image(t, &x) - quad).abs() < 1e-10);
    }

    #[test]
    fn monotone_in_indices() {
        // raising any Hurst index of an admissible Regular spec keeps it admissible
        let base = spec(2, 0.8, &[0.75, 0.8]);
        assert!(base.validate().admissible);
        for bump in [(0.05, 0, 0.0, 0.0), (0.0, 1, 0.1, 0.0), (0.0, 2, 0.0, 0.15)] {
            let mut s = base.clone();
            s.h0 += bump.0;
            if bump.1 == 1 {
                s.h[0] += bump.2;
            }
            if bump.1 == 2 {
                s.h[1] += bump.3;
            }
            assert!(s.validate().admissible);
        }
    }
}
