//! Event store, clinician review workflow, retraining jobs and the HTTP
//! surface used by the review dashboard.

mod error;
pub mod http;
pub mod log;
mod retrain;
mod service;
mod state;
mod store;
mod types;

pub use error::{Error, Result};
pub use http::{router, serve};
pub use retrain::{PipelineConfig, PipelineTrainer, SessionSnapshot, TrainedModel, Trainer, TrainingSnapshot};
pub use service::{Service, ServiceConfig, MODELS_DIR};
pub use state::{EventChange, SessionState, State, StoredEvent};
pub use store::{Store, StoreConfig, LOG_FILE, SNAPSHOT_FILE};
pub use types::{
    AlertRecord, Decision, EventView, JobOutcome, JobStatus, ModelKind, ModelVersion, RetrainJob, ReviewDecision,
    ReviewEntry, ReviewRequest, SessionInfo, Timeline,
};
