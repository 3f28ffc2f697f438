use feddrl_fl::FlError;
use feddrl_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("replay buffer holds {have} experiences, need {need}")]
    InsufficientBuffer { have: usize, need: usize },
    #[error("merged experience buffer is empty")]
    EmptyBuffer,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("malformed agent data: {0}")]
    Codec(String),
}

pub type Result<T> = std::result::Result<T, AgentError>;
