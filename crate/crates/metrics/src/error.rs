use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid run log: {0}")]
    Log(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
