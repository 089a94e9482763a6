use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The requested computation exceeds a configured work budget or size limit.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// Evaluation requested outside the admissible domain (e.g. |z| >= 1).
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numerical method failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::ResourceLimit(msg.into())
    }
}
