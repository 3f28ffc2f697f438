use std::path::PathBuf;

use thiserror::Error;

/// Exit code for bad configuration or arguments.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for failures while running.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] feddrl_data::DataError),
    #[error(transparent)]
    Fl(#[from] feddrl_fl::FlError),
    #[error(transparent)]
    Agent(#[from] feddrl_agent::AgentError),
    #[error(transparent)]
    Metrics(#[from] feddrl_metrics::MetricsError),
    #[error(transparent)]
    Nn(#[from] feddrl_nn::NnError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
