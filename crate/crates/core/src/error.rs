use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate camera basis")]
    DegenerateBasis,

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot decode a zero-length normal")]
    ZeroNormal,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("underdetermined: no light observations")]
    Underdetermined,

    #[error("invalid initialization")]
    InvalidInitialization,

    #[error("empty mask")]
    EmptyMask,

    #[error("pfm parse error at byte {offset}: {message}")]
    Pfm { offset: usize, message: String },

    #[error("missing G-buffer maps in {dir}: {missing:?}")]
    MissingMaps { dir: PathBuf, missing: Vec<String> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
