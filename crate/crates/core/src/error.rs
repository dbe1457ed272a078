use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A tuning parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A brute-force routine was asked to handle an instance it refuses to enumerate.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// The experiment configuration is inconsistent.
    #[error("config error: {0}")]
    Config(String),
    /// An internal invariant was violated. Always a bug.
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("episode with seed {seed} failed: {source}")]
    Episode {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn parameter<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
