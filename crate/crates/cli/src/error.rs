use std::path::Path;

use thiserror::Error;

/// Errors surfaced to the command line, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    /// Conditioning refusals and empty rejection samples.
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<qniff::Error> for CliError {
    fn from(e: qniff::Error) -> Self {
        let msg = e.to_string();
        match e {
            _ if e.is_numerical() => CliError::Numerical(msg),
            qniff::Error::Io(_) => CliError::Io(msg),
            qniff::Error::Csv(ref c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => CliError::Io(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
