use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBound { name: String, lower: f64, upper: f64 },
    #[error("row `{row}` references undeclared variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("row `{0}` has a non-finite coefficient or right-hand side")]
    NonFiniteCoefficient(String),
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("simplex numerical failure: {0}")]
    Numerical(String),
    #[error("model has {binaries} binaries, above the internal limit of {limit}; use an external solver or force the internal one")]
    TooManyBinaries { binaries: usize, limit: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("MPS parse error at line {line}: {message}")]
    MpsParse { line: usize, message: String },
    #[error("external solver command `{command}` failed: {message}")]
    External { command: String, message: String },
    #[error("solution file parse error at line {line}: {message}")]
    SolutionParse { line: usize, message: String },
    #[error("external solution rejected: {0}")]
    Revalidation(String),
}

impl MilpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MilpError::Io {
            path: path.into(),
            source,
        }
    }
}
