//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("object id {id} out of range for dataset of {n} objects")]
    IdOutOfRange { id: usize, n: usize },

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("dataset has no class labels")]
    MissingLabels,

    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        path: String,
        location: String,
        message: String,
    },

    #[error("artifact schema version {found} is not supported (this build reads version {supported})")]
    SchemaVersion { found: u64, supported: u64 },

    #[error("dataset checksum mismatch: artifact was built from {expected}, supplied data is {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("oracle input stream closed before all prompts were answered")]
    OracleClosed,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
