//! Recovering model parameters from measured traces and cavity scans.

pub mod fit;
pub mod linewidth;
pub mod lm;
pub mod preprocess;

pub use fit::{fit_cost, fit_spectrum, FitOptions, FitResult, ParamBounds};
pub use linewidth::{extract_linewidth, AiryScan, LinewidthResult, SyntheticAiryScan};
pub use preprocess::{normalize_to_shot, subtract_dark};
