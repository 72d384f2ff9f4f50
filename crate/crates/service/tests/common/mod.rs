#![allow(dead_code)]

use std::sync::mpsc::Receiver;
use std::sync::Mutex;

use agitrack_core::time::Timestamp;
use agitrack_realtime::{DetectedEvent, EventStatus, Modality, ScorePoint};
use agitrack_service::*;

pub fn session(id: &str, labeled: bool) -> SessionInfo {
    SessionInfo {
        session_id: id.into(),
        participant_id: "p".into(),
        t0: Timestamp(0),
        duration_s: 7200.0,
        dir: None,
        labeled,
    }
}

pub fn secs(s: i64) -> Timestamp {
    Timestamp(s * 1000)
}

/// Closed FUSED event over `[onset, offset)` seconds with a 300 s buffer.
pub fn event(id: &str, session: &str, onset: i64, offset: i64) -> DetectedEvent {
    DetectedEvent {
        event_id: id.into(),
        session_id: session.into(),
        onset: secs(onset),
        offset: Some(secs(offset)),
        record_start: secs((onset - 300).max(0)),
        record_end: secs(offset + 300),
        modality: Modality::Fused,
        peak_score: 0.9,
        status: EventStatus::Closed,
        truncated: false,
        members: vec![],
        evidence: vec![ScorePoint { t: secs(onset), score: 0.9, modality: Modality::Video }],
    }
}

pub fn open_event(id: &str, session: &str, onset: i64) -> DetectedEvent {
    DetectedEvent { offset: None, status: EventStatus::Open, record_end: secs(onset + 30), ..event(id, session, onset, onset + 1) }
}

pub fn review(id: &str, d: Decision, start: Option<i64>, end: Option<i64>) -> ReviewDecision {
    ReviewDecision {
        event_id: id.into(),
        decision: d,
        adjusted_start: start.map(secs),
        adjusted_end: end.map(secs),
        reviewer: "dr".into(),
        reviewed_at: Timestamp(1),
        note: None,
    }
}

pub fn fast_store() -> StoreConfig {
    StoreConfig { durable: false, snapshot_every: 0 }
}

/// Trainer double: fixed AUC, row count = number of review intervals, and
/// an optional gate that holds training until a message arrives.
pub struct StubTrainer {
    pub auc: Mutex<Option<f64>>,
    pub gate: Option<Mutex<Receiver<()>>>,
}

impl StubTrainer {
    pub fn new(auc: f64) -> Self {
        StubTrainer { auc: Mutex::new(Some(auc)), gate: None }
    }

    pub fn set_auc(&self, auc: Option<f64>) {
        *self.auc.lock().unwrap() = auc;
    }
}

impl Trainer for StubTrainer {
    fn train(&self, _kind: ModelKind, snap: &TrainingSnapshot) -> Result<TrainedModel> {
        if let Some(g) = &self.gate {
            let _ = g.lock().unwrap().recv();
        }
        let rows = snap.sessions.iter().map(|s| s.review_labels.len()).sum();
        Ok(TrainedModel {
            bytes: "{}".into(),
            auc: *self.auc.lock().unwrap(),
            accuracy: Some(0.9),
            n_train: 7,
            n_test: 3,
            rows,
        })
    }
}
