use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("insufficient input: {0}")]
    InsufficientInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("duplicate entry: {0}")]
    Duplicate(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("subject {id}: {source}")]
    Subject {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_subject(id: &str, source: Error) -> Self {
        Error::Subject {
            id: id.to_string(),
            source: Box::new(source),
        }
    }
}
