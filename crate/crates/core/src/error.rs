use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented constraint.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A structured document could not be parsed; `path` is the field path.
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    /// An input that a computation cannot be defined on (empty set, zero vector, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A query point lies strictly inside an obstacle.
    #[error("point lies inside obstacle")]
    InsideObstacle,

    /// An operation was called in a state its contract forbids.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("compatibility error: {0}")]
    Compatibility(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Parses JSON, reporting the field path of the first failure.
    pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }
}
