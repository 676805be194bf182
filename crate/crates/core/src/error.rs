//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by construction, I/O and numerical routines.
#[derive(Debug, Error)]
pub enum FdError {
    /// Tensor axes do not match the grid lengths, or two related objects
    /// disagree on their dimensions.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A sampling grid is empty, non-increasing or contains non-finite values.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A container would be empty (no observations, no points).
    #[error("empty data: {0}")]
    EmptyData(String),

    /// Observation keys of `argvals` and `values` differ.
    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    /// A missing-value marker appeared where none is allowed.
    #[error("missing values: {0}")]
    MissingValues(String),

    /// An observation index or range is out of bounds.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The weighted design matrix of a local fit is rank deficient.
    #[error("rank deficient local fit at t0={t0}{}", obs.map(|n| format!(" (observation {n})")).unwrap_or_default())]
    RankDeficient { t0: f64, obs: Option<usize> },

    /// An iterative procedure failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A decomposition or solve failed for numerical reasons.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FdError>;
