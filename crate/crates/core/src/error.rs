use thiserror::Error;

/// Errors shared across the numerical and combinatorial layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("orbit database: {0}")]
    Database(String),

    #[error("budget exhausted: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
