use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (dimensions, non-finite values, bad flags).
    #[error("invalid input: {0}")]
    Input(String),

    /// A mathematical hypothesis of the requested operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An iterative solver stopped before reaching the requested accuracy.
    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("simplex iteration cap of {cap} exceeded")]
    IterationCap { cap: usize },

    /// A result contradicts theory; almost always a tolerance problem.
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
