use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line tool. [`CliError::exit_code`] maps them to
/// the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("non-numeric value {value:?} at row {row}, column {col}")]
    NonNumeric { row: usize, col: usize, value: String },

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] espresso::Error),

    #[error("config file: {0}")]
    Config(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 2,
            _ => 1,
        }
    }
}
