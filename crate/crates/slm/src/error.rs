use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum SlmError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("vocabulary error: {0}")]
    Vocab(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SlmError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SlmError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, SlmError>;
