use thiserror::Error;

/// Errors shared by every construction in the workbench.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A query needed information past the finite horizon.
    #[error("horizon exceeded: {0}")]
    HorizonExceeded(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Some value needed for the answer is not yet resolved at the horizon.
    #[error("pending: {0}")]
    Pending(String),

    /// A string extending the forcing witness lands in the bad-string set.
    #[error("forcing violated: oracle string {tau} sends index {index} to {value}, which is in B_{index}")]
    ForcingViolated { tau: String, index: usize, value: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn horizon(msg: impl Into<String>) -> Self {
        Error::HorizonExceeded(msg.into())
    }
}
