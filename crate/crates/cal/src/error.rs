//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalError {
    #[error("{context}: length mismatch, expected {expected}, got {got}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of bounds for length {length}")]
    IndexOutOfBounds { index: usize, length: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("value {value} outside encodable range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    /// An all-zero vector was asked to produce a value; callers treat this
    /// as "no prediction" rather than a hard failure.
    #[error("no prediction")]
    NoPrediction,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CalError>;
