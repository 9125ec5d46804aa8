//! Command errors with the stable exit-code contract:
//! 0 success, 1 usage error, 2 data error, 3 numerical failure.

use stainbench_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("id mismatch between source and generated manifests; first offenders: {}", .0.join(", "))]
    IdMismatch(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::IdMismatch(_) | CliError::Io(_) => 2,
            CliError::Json(_) | CliError::Csv(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_) | CoreError::InvalidWindow { .. } => 1,
                CoreError::DegenerateStainPlane
                | CoreError::AsymmetricMatrix
                | CoreError::NonFiniteSample
                | CoreError::InsufficientTissue { .. }
                | CoreError::NoUsableTiles { .. } => 3,
                _ => 2,
            },
        }
    }

    /// Prints the human-readable message plus one machine-readable JSON line
    /// to stderr.
    pub fn emit(&self) {
        eprintln!("error: {self}");
        let line = serde_json::json!({
            "error": { "code": self.exit_code(), "message": self.to_string() }
        });
        eprintln!("{line}");
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
