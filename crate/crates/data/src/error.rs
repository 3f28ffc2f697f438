use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed IDX data: {0}")]
    Idx(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid partition spec: {0}")]
    Spec(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("cannot form label clusters: {0}")]
    Clusters(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

impl DataError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
