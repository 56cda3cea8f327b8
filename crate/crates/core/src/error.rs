use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved:e}, requested {requested:e}")]
    NonConvergent {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    /// Amplitude reached the edge of the preallocated lattice window.
    #[error("lattice window exhausted at step {step} (capacity {capacity} steps)")]
    LatticeOverflow { step: usize, capacity: usize },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
