use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("invalid campus model: {0}")]
    Invalid(String),
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: PathBuf, column: String },
    #[error("{file}: ragged day, expected {expected} slots, found {found}")]
    RaggedDay {
        file: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{file}: non-binary indicator {value} in column `{column}`")]
    NonBinary {
        file: PathBuf,
        column: String,
        value: f64,
    },
    #[error("{file}: {message}")]
    Data { file: PathBuf, message: String },
    #[error("historical dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("device limit violated: {0}")]
    Device(String),
    #[error("reduction target {target} outside 1..={available}")]
    TargetOutOfRange { target: usize, available: usize },
    #[error("scenario set is empty")]
    NoScenarios,
    #[error("solution is not usable: {0}")]
    Unsolved(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Milp(#[from] campus_milp::MilpError),
}

impl CoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        CoreError::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
