//! Crate-wide error type and result alias.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or argument combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// Index outside the valid range of a register or collection.
    #[error("index error: {0}")]
    Index(String),

    /// Tensor or parameter shapes that do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Math domain violation, e.g. probabilities outside (0, 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed data file; `offset` is the byte where decoding failed.
    #[error("format error in {path} at byte {offset}: {msg}")]
    Format {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    /// Statistics or PCA fit failure (degenerate input).
    #[error("fit error: {0}")]
    Fit(String),

    /// Checkpoint that cannot be decoded or does not match the model shape.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Any error raised while processing one training sample, tagged with
    /// the sample's position in the epoch's iteration order.
    #[error("at sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            msg: msg.into(),
        }
    }

    pub fn at_sample(index: usize, source: Error) -> Self {
        Error::Sample {
            index,
            source: Box::new(source),
        }
    }
}
