//! Sampling of Brownian paths and fractional-Brownian-sheet realizations,
//! plus evaluation of the smoothed noise field.

mod brownian;
mod sheet;
mod smoothed;

pub use brownian::{refine_bridge, sample_bm, BrownianPath};
pub use sheet::{sample_sheet, SheetSample};
pub use smoothed::SmoothedNoiseField;
