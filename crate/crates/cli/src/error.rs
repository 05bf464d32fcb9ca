use thiserror::Error;

/// Errors surfaced by the command-line front end, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("precondition failed in cell {cell}: {source}")]
    Precondition {
        cell: String,
        #[source]
        source: lerw_core::Error,
    },
    #[error("missing records:\n  {}", .0.join("\n  "))]
    MissingData(Vec<String>),
    #[error("calibration violates the growth-exponent bound: {0}")]
    CalibrationBound(String),
    #[error("{0}")]
    Analysis(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Manifest(_) => 2,
            CliError::Precondition { .. } => 3,
            CliError::MissingData(_) => 4,
            CliError::CalibrationBound(_) => 5,
            CliError::Analysis(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
