use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the vision pipeline, plant, harness, and config layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// All contour points are collinear; no convex hull with interior exists.
    #[error("degenerate hull: contour points are collinear")]
    DegenerateHull,

    /// A frame feature could not be computed (missing or degenerate pool).
    #[error("feature unavailable: {0}")]
    FeatureUnavailable(String),

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("config validation error: {0}")]
    ConfigValidation(String),

    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image file {path}: {message}")]
    ImageFormat { path: PathBuf, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
