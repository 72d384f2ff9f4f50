use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("row has {got} features, model expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] agitrack_core::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
