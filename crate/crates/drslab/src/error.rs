use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] drs_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("oracle checks failed: {0}")]
    OracleFailed(String),
    #[error("every seed failed")]
    AllSeedsFailed,
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Core(e) => e.kind(),
            LabError::Config(_) => "config",
            LabError::Io { .. } => "io",
            LabError::Json(_) => "json",
            LabError::Csv(_) => "csv",
            LabError::Checkpoint(_) => "checkpoint",
            LabError::OracleFailed(_) => "oracle_failed",
            LabError::AllSeedsFailed => "all_seeds_failed",
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Core(drs_core::Error::Config(_)) => 2,
            LabError::OracleFailed(_) => 3,
            _ => 1,
        }
    }

    /// The machine-readable error object the CLI prints on failure.
    pub fn to_report(&self) -> ErrorReport {
        ErrorReport {
            error: ErrorBody {
                kind: self.kind().to_string(),
                message: self.to_string(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}
