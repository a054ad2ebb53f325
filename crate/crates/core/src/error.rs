use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("empty mask")]
    EmptyMask,

    #[error("mask too thin for radius {radius}")]
    MaskTooThin { radius: usize },

    #[error("appearance region too small for patch size {patch_size}")]
    RegionTooSmall { patch_size: usize },

    #[error("empty point set: {0}")]
    EmptyPointSet(&'static str),

    #[error("empty image")]
    EmptyImage,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("scores file row {row}: {reason}")]
    MalformedScore { row: usize, reason: String },

    #[error("validation failed at {path}: {reason}")]
    Validation { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
