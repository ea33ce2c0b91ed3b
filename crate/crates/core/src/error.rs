use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a single start of a multi-start fit was discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct StartFailure {
    pub start_index: usize,
    pub psi_start: Vec<f64>,
    pub cause: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("no events: at least one observation must have status 1")]
    NoEvents,

    #[error("log partial likelihood is not finite at the starting point")]
    InvalidStart,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("information matrix is not invertible (condition number {condition:.3e})")]
    NonInvertibleInformation { condition: f64 },

    #[error("all {} starts failed; first cause: {}", .0.len(), .0.first().map(|f| f.cause.as_str()).unwrap_or("none"))]
    AllStartsFailed(Vec<StartFailure>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty file: no data rows")]
    EmptyFile,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("data row {row}: missing value in column `{column}`")]
    MissingCell { row: usize, column: String },

    #[error("data row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("data row {row}: status must be 0 or 1, found `{value}`")]
    InvalidStatus { row: usize, value: String },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid config key `{0}`")]
    UnknownConfigKey(String),
}

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Fit,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } | Error::UnknownConfigKey(_) => {
                ErrorKind::Usage
            }
            Error::InvalidData(_)
            | Error::NoEvents
            | Error::Io { .. }
            | Error::EmptyFile
            | Error::MissingColumn(_)
            | Error::MissingCell { .. }
            | Error::NonNumeric { .. }
            | Error::InvalidStatus { .. }
            | Error::Csv(_) => ErrorKind::Data,
            Error::InvalidStart
            | Error::DegenerateFit(_)
            | Error::NonInvertibleInformation { .. }
            | Error::AllStartsFailed(_) => ErrorKind::Fit,
        }
    }

    /// Short machine-readable tag, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidData(_) => "invalid_data",
            Error::NoEvents => "no_events",
            Error::InvalidStart => "invalid_start",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::NonInvertibleInformation { .. } => "non_invertible_information",
            Error::AllStartsFailed(_) => "all_starts_failed",
            Error::Io { .. } => "io",
            Error::EmptyFile => "empty_file",
            Error::MissingColumn(_) => "missing_column",
            Error::MissingCell { .. } => "missing_cell",
            Error::NonNumeric { .. } => "non_numeric",
            Error::InvalidStatus { .. } => "invalid_status",
            Error::Csv(_) => "csv",
            Error::Config { .. } => "config",
            Error::UnknownConfigKey(_) => "unknown_config_key",
        }
    }
}
