//! Squeezed-light noise spectra: the OPO-plus-loss model, loss budgets,
//! spectrum fitting, cavity linewidth extraction and Monte-Carlo homodyne
//! simulation.
//!
//! Noise levels are variances relative to shot noise (vacuum = 1, 0 dB).
//! Frequencies are in Hz, linewidths are half widths at half maximum.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimation;
pub mod level;
pub mod loss;
pub mod model;
pub mod report;
pub mod simulation;
pub mod svg;
pub mod trace;

pub use error::{Error, Result};
pub use level::{db_to_linear, linear_to_db, NoiseLevel, QuadraturePair};
pub use loss::{
    apply_loss, apply_phase_jitter, compose, invert_pair, required_extra_loss, BudgetInversion, ExtraLoss,
    LossBudget, LossElement, PhaseJitter,
};
pub use model::{frequency_grid, pump_ratio_from_powers, spectrum_at, spectrum_trace, ChainModel, SidebandFrequency, Spacing};
pub use report::KeyValueDoc;
pub use trace::{PowerUnit, SpectrumTrace, TraceKind};
