use thiserror::Error;

use crate::matrix::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NonSquare { row: usize, len: usize, n: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("entry ({j},{k}) is not positive")]
    NonPositive { j: usize, k: usize },
    #[error("matrix is not standard: {0}")]
    NotStandard(Violation),
    #[error("invalid exponents: {0}")]
    Exponents(String),
    #[error("index {index} out of range (size {size})")]
    Index { index: usize, size: usize },
    #[error("parameter must be positive: {0}")]
    NonPositiveParameter(&'static str),
    #[error("point is zero")]
    ZeroPoint,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("Nyquist violation: {0}")]
    Nyquist(String),
    #[error("window too small: {0}")]
    Window(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("depth cap exceeded: {0}")]
    DepthCap(String),
    #[error("arithmetic overflow in exact computation")]
    Overflow,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
