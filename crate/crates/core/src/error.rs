use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure classes of the
/// library surface: bad parameters, impossible geometry, missing data,
/// failed experiments, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
    pub fn lookup(msg: impl Into<String>) -> Self {
        Error::Lookup(msg.into())
    }
    pub fn experiment(msg: impl Into<String>) -> Self {
        Error::Experiment(msg.into())
    }
    pub fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}
