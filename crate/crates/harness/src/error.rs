use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Validation(String),
    #[error(
        "estimated run time {estimated_seconds:.0} s exceeds the budget of {budget_seconds:.0} s \
         (raise budget_seconds or pass --override-budget)"
    )]
    Budget {
        estimated_seconds: f64,
        budget_seconds: f64,
    },
    #[error("{stage} failed: {source}")]
    Runtime {
        stage: &'static str,
        #[source]
        source: onoff_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report {}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },
}

impl HarnessError {
    /// Process exit code: 1 validation, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Parse(_) | HarnessError::Validation(_) | HarnessError::Budget { .. } => 1,
            HarnessError::Runtime { .. } => 2,
            HarnessError::Io { .. } | HarnessError::Malformed { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        HarnessError::Malformed {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

pub(crate) fn stage(stage: &'static str) -> impl FnOnce(onoff_core::Error) -> HarnessError {
    move |source| HarnessError::Runtime { stage, source }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
