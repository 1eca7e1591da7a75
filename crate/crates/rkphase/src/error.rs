//! Library error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("ground truth has zero norm")]
    ZeroNorm,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate spectral operator: all weights are zero")]
    DegenerateSpectral,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for parameter-validation failures.
pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
