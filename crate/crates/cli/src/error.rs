use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .fields.join("; "))]
    Usage { fields: Vec<String> },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] adiabatic_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Machine-readable failure description.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
}

impl CliError {
    pub fn usage(field: impl Into<String>) -> Self {
        CliError::Usage {
            fields: vec![field.into()],
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, CliError::Usage { .. } | CliError::Parse(_))
    }

    /// 2 for usage errors, 1 for everything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        if self.is_usage() {
            2
        } else {
            1
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            status: "error",
            kind: if self.is_usage() { "usage" } else { "runtime" },
            message: self.to_string(),
            fields: match self {
                CliError::Usage { fields } => fields.clone(),
                _ => Vec::new(),
            },
        }
    }
}
