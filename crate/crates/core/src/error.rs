use thiserror::Error;

/// Errors raised by the library. Negative mathematical outcomes (a covering
/// that does not exist, an undefined slope) are values, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("generator index {index} out of range 1..={count}")]
    GeneratorOutOfRange { index: u32, count: u32 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covering triplet index {index} out of range 1..={count}")]
    TripletOutOfRange { index: usize, count: usize },

    #[error("no covering triplet reaches c0 = {c0} at x = {x:?} (best value {best})")]
    CoveringViolation { x: Vec<f64>, c0: f64, best: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate coefficient index (i={i}, j={j}, k={k:?})")]
    DuplicateIndex { i: u32, j: u32, k: Vec<i64> },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
