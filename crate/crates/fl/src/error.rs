use feddrl_data::DataError;
use feddrl_metrics::MetricsError;
use feddrl_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid round config: {0}")]
    Config(String),
    #[error("invalid impact vector: {0}")]
    Impacts(String),
    #[error("aggregation failed: {0}")]
    Aggregation(String),
    #[error("impact policy failed: {0}")]
    Policy(String),
}

pub type Result<T> = std::result::Result<T, FlError>;
