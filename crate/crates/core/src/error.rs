use std::path::{Path, PathBuf};

/// Errors raised across the crate. Variants carry enough context to name the
/// offending key, keypoint, path or loss component.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("frame index {index} out of range for clip of {len} frames")]
    Bounds { index: usize, len: usize },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("incompatible checkpoint: found format `{found}`, expected `{expected}`")]
    Version { found: String, expected: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn decode(path: impl AsRef<Path>, message: impl ToString) -> Self {
        Error::Decode { path: path.as_ref().to_path_buf(), message: message.to_string() }
    }
}
