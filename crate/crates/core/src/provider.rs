//! Failure modes shared by chat and embedding backends.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    /// Transport failure, exhausted retries, or an exhausted mock script.
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    /// The backend answered but the payload did not have the expected shape.
    #[error("malformed provider response: {0}")]
    BadResponse(String),
}
