use agitrack_core::labels::LabelInterval;
use agitrack_core::time::Timestamp;
use agitrack_realtime::{DetectedEvent, EventStatus, ScorePoint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Confirm,
    Reject,
}

impl std::str::FromStr for Decision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CONFIRM" => Ok(Decision::Confirm),
            "REJECT" => Ok(Decision::Reject),
            other => Err(Error::validation(format!("unknown decision {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub event_id: String,
    pub decision: Decision,
    #[serde(default)]
    pub adjusted_start: Option<Timestamp>,
    #[serde(default)]
    pub adjusted_end: Option<Timestamp>,
    pub reviewer: String,
    pub reviewed_at: Timestamp,
    #[serde(default)]
    pub note: Option<String>,
}

/// Review body as posted over HTTP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewRequest {
    pub decision: Decision,
    #[serde(default)]
    pub adjusted_start_ms: Option<i64>,
    #[serde(default)]
    pub adjusted_end_ms: Option<i64>,
    pub reviewer: String,
    #[serde(default)]
    pub note: Option<String>,
}

impl ReviewRequest {
    pub fn into_decision(self, event_id: &str, reviewed_at: Timestamp) -> ReviewDecision {
        ReviewDecision {
            event_id: event_id.to_string(),
            decision: self.decision,
            adjusted_start: self.adjusted_start_ms.map(Timestamp),
            adjusted_end: self.adjusted_end_ms.map(Timestamp),
            reviewer: self.reviewer,
            reviewed_at,
            note: self.note,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Forest,
    Recurrent,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Recurrent => "recurrent",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forest" => Ok(ModelKind::Forest),
            "recurrent" | "seq" => Ok(ModelKind::Recurrent),
            other => Err(Error::validation(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_active(self) -> bool {
        matches!(self, JobStatus::Queued | JobStatus::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainJob {
    pub job_id: String,
    pub kind: ModelKind,
    /// log sequence number the training data was taken at
    pub snapshot_id: u64,
    pub status: JobStatus,
    #[serde(default)]
    pub model_version: Option<u32>,
    #[serde(default)]
    pub snapshot_rows: Option<usize>,
    #[serde(default)]
    pub auc: Option<f64>,
    /// recorded held-out AUC of the serving model when the job finished
    #[serde(default)]
    pub current_auc: Option<f64>,
    #[serde(default)]
    pub swapped: bool,
    #[serde(default)]
    pub swap_withheld: bool,
    #[serde(default)]
    pub message: Option<String>,
}

/// Result fields written when a job ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub status: JobStatus,
    #[serde(default)]
    pub model_version: Option<u32>,
    #[serde(default)]
    pub snapshot_rows: Option<usize>,
    #[serde(default)]
    pub auc: Option<f64>,
    #[serde(default)]
    pub current_auc: Option<f64>,
    #[serde(default)]
    pub swapped: bool,
    #[serde(default)]
    pub swap_withheld: bool,
    #[serde(default)]
    pub message: Option<String>,
}

impl JobOutcome {
    pub fn failed(msg: impl Into<String>) -> Self {
        JobOutcome {
            status: JobStatus::Failed,
            model_version: None,
            snapshot_rows: None,
            auc: None,
            current_auc: None,
            swapped: false,
            swap_withheld: false,
            message: Some(msg.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVersion {
    pub kind: ModelKind,
    pub version: u32,
    /// file name inside the models directory
    pub file: String,
    #[serde(default)]
    pub auc: Option<f64>,
    #[serde(default)]
    pub accuracy: Option<f64>,
    #[serde(default)]
    pub n_train: usize,
    #[serde(default)]
    pub n_test: usize,
    /// absent for the initially installed model
    #[serde(default)]
    pub job_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub participant_id: String,
    pub t0: Timestamp,
    pub duration_s: f64,
    /// session directory with raw data, needed for retraining
    #[serde(default)]
    pub dir: Option<String>,
    /// whether the base labels cover the whole session; windows of
    /// unlabeled sessions only enter training through reviews
    #[serde(default)]
    pub labeled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub seq: u64,
    pub review: ReviewDecision,
    pub interval: LabelInterval,
}

/// Event as returned by queries: the engine's copy with the review status
/// applied, plus log cursors and review history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventView {
    #[serde(flatten)]
    pub event: DetectedEvent,
    /// sequence number of the first record of this event
    pub cursor: u64,
    pub updated_seq: u64,
    pub reviews: Vec<ReviewEntry>,
}

/// One record on the alert stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub cursor: u64,
    pub event_id: String,
    pub session_id: String,
    pub modality: agitrack_realtime::Modality,
    pub onset: Timestamp,
    pub peak_score: f64,
    pub status: EventStatus,
}

impl AlertRecord {
    pub fn of(e: &DetectedEvent, cursor: u64) -> Self {
        AlertRecord {
            cursor,
            event_id: e.event_id.clone(),
            session_id: e.session_id.clone(),
            modality: e.modality,
            onset: e.onset,
            peak_score: e.peak_score,
            status: e.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub session: SessionInfo,
    pub scores: Vec<ScorePoint>,
    pub labels: Vec<LabelInterval>,
    pub events: Vec<EventView>,
}
