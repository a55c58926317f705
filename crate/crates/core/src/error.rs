use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the modeling, estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pump power {pump} W is at or above the threshold {threshold} W (model requires a below-threshold OPA)")]
    AboveThreshold { pump: f64, threshold: f64 },

    #[error("no squeezing: squeezed variance {squeezed} must be < 1 and anti-squeezed variance {antisqueezed} > 1")]
    NoSqueezing { squeezed: f64, antisqueezed: f64 },

    #[error("inconsistent pair: {0}")]
    InconsistentPair(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("frequency grids do not match: {0}")]
    GridMismatch(String),

    #[error("unit error: {0}")]
    Unit(String),

    #[error("marker detection failed: {0}")]
    MarkerDetection(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
