use agitrack_core::time::Timestamp;
use thiserror::Error;

use crate::event::Modality;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{modality} score at {t} ms is not after the previous one at {last} ms")]
    NonMonotone { modality: Modality, t: i64, last: i64 },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("model schema does not match the session pipeline: {0}")]
    Schema(String),
    #[error("engine already finished at {0:?}")]
    Finished(Timestamp),
    #[error(transparent)]
    Core(#[from] agitrack_core::Error),
    #[error(transparent)]
    Forest(#[from] agitrack_forest::Error),
    #[error(transparent)]
    Seqnet(#[from] agitrack_seqnet::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
