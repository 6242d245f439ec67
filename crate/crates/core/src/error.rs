use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("invalid norm order {0}: must satisfy q >= 1")]
    InvalidOrder(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    MaxIterationsExceeded { iterations: usize, kkt_residual: f64 },

    #[error("zero matrix has no Hölder-tight direction")]
    ZeroMatrix,

    #[error("negative input {0}")]
    NegativeInput(f64),

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("solver failure at fold {fold}, lambda {lambda}: {source}")]
    SolverFailure {
        fold: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fold too small: {0}")]
    FoldTooSmall(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
