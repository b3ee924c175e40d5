use thiserror::Error;

/// Errors raised across the exact pipeline, the estimator and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration or table would exceed a configured guard.
    #[error("capacity exceeded: {what} needs {needed}, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("generation failed after {attempts} attempts: {log}")]
    Generation { attempts: usize, log: String },

    /// Two independent computations of the same quantity disagreed.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn capacity(what: &'static str, needed: u128, limit: u128) -> Error {
    Error::Capacity {
        what,
        needed,
        limit,
    }
}
