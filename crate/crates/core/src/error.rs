use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum FlowError {
    #[error(
        "dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}"
    )]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("solver diverged at iteration {iteration}: non-finite {quantity}")]
    Divergence {
        iteration: usize,
        quantity: &'static str,
    },

    #[error("flow file format error: {0}")]
    Format(String),

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("rank aggregation: {0}")]
    Aggregation(String),

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl FlowError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FlowError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(expected: (usize, usize), got: (usize, usize)) -> Self {
        FlowError::DimensionMismatch {
            expected_width: expected.0,
            expected_height: expected.1,
            width: got.0,
            height: got.1,
        }
    }

    /// True for errors caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            FlowError::Io { .. }
                | FlowError::Codec { .. }
                | FlowError::Format(_)
                | FlowError::UnsupportedImage(_)
                | FlowError::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
