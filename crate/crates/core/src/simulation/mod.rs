//! Monte-Carlo homodyne detection and the interferometer enhancement model.

pub mod dump;
pub mod homodyne;
pub mod mzi;

pub use homodyne::{
    sample_quadratures, sample_variance, zero_span_trace, HomodyneRun, PhaseProgram, ZeroSpanPoint,
};
pub use mzi::{mzi_response, mzi_spectrum, AnalyzerNoise, MziConfig, MziResult};
