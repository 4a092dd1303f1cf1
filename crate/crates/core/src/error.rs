use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("missing required column `{column}` in {path}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("duplicate bbl `{bbl}` at rows {first} and {second}")]
    DuplicateBbl {
        bbl: String,
        first: usize,
        second: usize,
    },
    #[error("degenerate_labels: {0}")]
    DegenerateLabels(String),
    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("undersized sample: {0}")]
    UndersizedSample(String),
    #[error("invalid race shares: {0}")]
    InvalidShares(String),
    #[error("calibration_failure: {0}")]
    Calibration(String),
    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),
    #[error("model format error: {0}")]
    ModelFormat(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::Io { .. }
            | Error::Csv { .. }
            | Error::MissingColumn { .. }
            | Error::DuplicateBbl { .. }
            | Error::NonFiniteFeature { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptyInput(_)
            | Error::InvalidShares(_)
            | Error::ModelFormat(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::DegenerateLabels(_)
            | Error::UndersizedSample(_)
            | Error::Calibration(_)
            | Error::DegenerateSurface(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
