use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input that must be finite was NaN or infinite.
    #[error("non-finite input: {context}")]
    NonFinite { context: &'static str },

    /// Angle of the zero vector requested.
    #[error("direction is undefined: both vector components are zero")]
    UndefinedDirection,

    /// An input collection that must be non-empty was empty.
    #[error("empty input: {context}")]
    Empty { context: &'static str },

    /// A parameter lies outside its domain.
    #[error("invalid parameter {name} = {value}: must satisfy {constraint}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Cholesky factorization failed.  `order` is the order of the smallest
    /// leading principal minor that is not positive definite (1-based).
    #[error("matrix is not positive definite: leading minor of order {order} is not positive")]
    NotPositiveDefinite { order: usize },

    /// Two paired collections disagree in length.
    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// Not enough posterior draws for the requested operation.
    #[error("chain too short: {len} draws, need at least {min}")]
    ChainTooShort { len: usize, min: usize },

    /// Model/data configuration is inconsistent (bad factor cells, missing
    /// windows, mismatched designs, ...).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
