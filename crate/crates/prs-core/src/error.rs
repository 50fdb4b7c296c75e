use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Error, Debug)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tensor shapes do not match the layer chain (a programming error in the
    /// caller, surfaced as a typed contract violation).
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    /// Operation on an object whose state does not permit it (e.g. predicting
    /// with non-finite weights).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Inconsistent simulation configuration (scheme/mode combination etc.).
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
