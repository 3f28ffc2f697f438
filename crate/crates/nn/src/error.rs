use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("backward called before forward")]
    BackwardBeforeForward,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("proximal_mu > 0 requires an anchor parameter vector")]
    MissingAnchor,
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid layer stack: {0}")]
    InvalidLayers(String),
    #[error("invalid SGD config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn shape_err(expected: impl ToString, got: impl ToString) -> NnError {
    NnError::ShapeMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
