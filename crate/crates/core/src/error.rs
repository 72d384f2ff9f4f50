use std::path::PathBuf;

use crate::series::Channel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{}:{line}: {msg}", file.display())]
    Malformed { file: PathBuf, line: usize, msg: String },

    #[error("{}: declared rate {declared} Hz but observed spacing implies {observed:.4} Hz", file.display())]
    RateMismatch { file: PathBuf, declared: String, observed: f64 },

    #[error("unknown channel file {0:?}")]
    UnknownChannel(String),

    #[error("missing channel {0}")]
    MissingChannel(Channel),

    #[error("window [{start_ms}, {end_ms}) extends past the end of channel {channel} at {channel_end_ms}")]
    WindowOutOfRange { channel: Channel, start_ms: i64, end_ms: i64, channel_end_ms: i64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
