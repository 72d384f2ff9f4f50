//! Store state as a pure fold over log entries.

use std::collections::BTreeMap;

use agitrack_core::labels::{LabelClass, LabelInterval, LabelSource};
use agitrack_realtime::{DetectedEvent, EventStatus, ScorePoint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::{Entry, LogRecord};
use crate::types::{
    Decision, EventView, JobStatus, ModelKind, ModelVersion, RetrainJob, ReviewDecision, ReviewEntry, SessionInfo,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub info: SessionInfo,
    pub base_labels: Vec<LabelInterval>,
    pub scores: Vec<ScorePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredEvent {
    /// engine copy, status OPEN or CLOSED
    pub event: DetectedEvent,
    pub first_seq: u64,
    pub updated_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub last_seq: u64,
    pub sessions: BTreeMap<String, SessionState>,
    pub events: BTreeMap<String, StoredEvent>,
    pub reviews: BTreeMap<String, Vec<ReviewEntry>>,
    pub jobs: BTreeMap<String, RetrainJob>,
    pub models: Vec<ModelVersion>,
    pub serving: BTreeMap<ModelKind, u32>,
}

/// What recording an event would do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventChange {
    New,
    Update,
    Unchanged,
}

impl State {
    pub fn fold<'a>(entries: impl IntoIterator<Item = &'a Entry>) -> Result<State> {
        let mut s = State::default();
        for e in entries {
            s.apply(e)?;
        }
        Ok(s)
    }

    /// Applies one entry. Entries must come in sequence order.
    pub fn apply(&mut self, entry: &Entry) -> Result<()> {
        if entry.seq != self.last_seq + 1 {
            return Err(Error::Corrupt { line: entry.seq as usize, msg: format!("expected sequence {}", self.last_seq + 1) });
        }
        let seq = entry.seq;
        match &entry.record {
            LogRecord::SessionRegistered { session, labels } => {
                self.sessions.insert(
                    session.session_id.clone(),
                    SessionState { info: session.clone(), base_labels: labels.clone(), scores: Vec::new() },
                );
            }
            LogRecord::EventRecorded { event } => {
                let first_seq = self.events.get(&event.event_id).map_or(seq, |s| s.first_seq);
                self.events
                    .insert(event.event_id.clone(), StoredEvent { event: event.clone(), first_seq, updated_seq: seq });
            }
            LogRecord::ScoresAppended { session_id, points } => {
                if let Some(s) = self.sessions.get_mut(session_id) {
                    s.scores.extend_from_slice(points);
                }
            }
            LogRecord::ReviewSubmitted { review, interval } => {
                self.reviews.entry(review.event_id.clone()).or_default().push(ReviewEntry {
                    seq,
                    review: review.clone(),
                    interval: *interval,
                });
                if let Some(ev) = self.events.get_mut(&review.event_id) {
                    ev.updated_seq = seq;
                }
            }
            LogRecord::JobQueued { job } => {
                self.jobs.insert(job.job_id.clone(), job.clone());
            }
            LogRecord::JobStarted { job_id } => {
                if let Some(j) = self.jobs.get_mut(job_id) {
                    j.status = JobStatus::Running;
                }
            }
            LogRecord::JobFinished { job_id, outcome } => {
                if let Some(j) = self.jobs.get_mut(job_id) {
                    j.status = outcome.status;
                    j.model_version = outcome.model_version;
                    j.snapshot_rows = outcome.snapshot_rows;
                    j.auc = outcome.auc;
                    j.current_auc = outcome.current_auc;
                    j.swapped = outcome.swapped;
                    j.swap_withheld = outcome.swap_withheld;
                    j.message = outcome.message.clone();
                }
            }
            LogRecord::ModelRegistered { model, activate } => {
                self.models.push(model.clone());
                if *activate {
                    self.serving.insert(model.kind, model.version);
                }
            }
        }
        self.last_seq = seq;
        Ok(())
    }

    pub fn check_session(&self, info: &SessionInfo, labels: &[LabelInterval]) -> Result<bool> {
        if info.session_id.is_empty() {
            return Err(Error::validation("session_id must not be empty"));
        }
        if !(info.duration_s >= 0.0) {
            return Err(Error::validation("duration_s must be non-negative"));
        }
        agitrack_core::labels::normalize(labels).map_err(|e| Error::validation(e.to_string()))?;
        match self.sessions.get(&info.session_id) {
            None => Ok(true),
            Some(s) if s.info == *info && s.base_labels == labels => Ok(false),
            Some(_) => Err(Error::Conflict(format!("session {} already registered differently", info.session_id))),
        }
    }

    /// Decides how `event` relates to the stored copy. Identical content is
    /// a no-op; an OPEN stored event may be updated in place by the same
    /// event (same session, modality and onset); anything else conflicts.
    pub fn check_event(&self, event: &DetectedEvent) -> Result<EventChange> {
        validate_event(event)?;
        if !self.sessions.contains_key(&event.session_id) {
            return Err(Error::validation(format!("unknown session {}", event.session_id)));
        }
        let Some(stored) = self.events.get(&event.event_id) else {
            return Ok(EventChange::New);
        };
        let old = &stored.event;
        if old == event {
            return Ok(EventChange::Unchanged);
        }
        let same_identity = old.session_id == event.session_id && old.modality == event.modality && old.onset == event.onset;
        if old.status == EventStatus::Open && same_identity {
            return Ok(EventChange::Update);
        }
        Err(Error::Conflict(format!("event {} already stored with different content", event.event_id)))
    }

    /// Label interval a review adds, after all precondition checks.
    pub fn check_review(&self, review: &ReviewDecision) -> Result<LabelInterval> {
        let stored = self.events.get(&review.event_id).ok_or_else(|| Error::NotFound(format!("event {}", review.event_id)))?;
        let ev = &stored.event;
        if ev.status == EventStatus::Open {
            return Err(Error::InvalidState(format!("event {} is still open", ev.event_id)));
        }
        if review.reviewer.trim().is_empty() {
            return Err(Error::validation("reviewer must not be empty"));
        }
        let offset = ev.offset.ok_or_else(|| Error::InvalidState("closed event without offset".into()))?;
        let start = review.adjusted_start.unwrap_or(ev.onset);
        let end = review.adjusted_end.unwrap_or(offset);
        if start >= end {
            return Err(Error::validation(format!("adjusted interval [{start}, {end}) is empty")));
        }
        if start < ev.record_start || end > ev.record_end {
            return Err(Error::validation(format!(
                "adjusted interval [{start}, {end}) leaves the recorded range [{}, {})",
                ev.record_start, ev.record_end
            )));
        }
        let klass = match review.decision {
            Decision::Confirm => LabelClass::Agitation,
            Decision::Reject => LabelClass::Normal,
        };
        Ok(LabelInterval { start, end, klass, source: LabelSource::VideoReview })
    }

    pub fn active_job(&self, kind: ModelKind) -> Option<&RetrainJob> {
        self.jobs.values().find(|j| j.kind == kind && j.status.is_active())
    }

    pub fn serving_model(&self, kind: ModelKind) -> Option<&ModelVersion> {
        let v = *self.serving.get(&kind)?;
        self.models.iter().find(|m| m.kind == kind && m.version == v)
    }

    pub fn next_version(&self, kind: ModelKind) -> u32 {
        self.models.iter().filter(|m| m.kind == kind).map(|m| m.version).max().unwrap_or(0) + 1
    }

    /// Latest review's interval for every reviewed event of the session.
    pub fn review_labels(&self, session_id: &str) -> Vec<LabelInterval> {
        self.reviews
            .iter()
            .filter(|(id, _)| self.events.get(*id).is_some_and(|e| e.event.session_id == session_id))
            .filter_map(|(_, h)| h.last().map(|r| r.interval))
            .collect()
    }

    /// Base labels followed by active review intervals.
    pub fn effective_labels(&self, session_id: &str) -> Vec<LabelInterval> {
        let mut out = self.sessions.get(session_id).map(|s| s.base_labels.clone()).unwrap_or_default();
        out.extend(self.review_labels(session_id));
        out
    }

    pub fn view(&self, id: &str) -> Option<EventView> {
        let s = self.events.get(id)?;
        let reviews = self.reviews.get(id).cloned().unwrap_or_default();
        let mut event = s.event.clone();
        if let Some(last) = reviews.last() {
            event.status = match last.review.decision {
                Decision::Confirm => EventStatus::Confirmed,
                Decision::Reject => EventStatus::Rejected,
            };
        }
        Some(EventView { event, cursor: s.first_seq, updated_seq: s.updated_seq, reviews })
    }

    /// Events changed after `since`, optionally of one status, in first-seen order.
    pub fn list_events(&self, status: Option<EventStatus>, since: Option<u64>) -> Vec<EventView> {
        let mut v: Vec<EventView> = self
            .events
            .values()
            .filter(|s| since.is_none_or(|c| s.updated_seq > c))
            .filter_map(|s| self.view(&s.event.event_id))
            .filter(|v| status.is_none_or(|st| v.event.status == st))
            .collect();
        v.sort_by_key(|v| v.cursor);
        v
    }
}

fn validate_event(e: &DetectedEvent) -> Result<()> {
    if e.event_id.is_empty() {
        return Err(Error::validation("event_id must not be empty"));
    }
    if !matches!(e.status, EventStatus::Open | EventStatus::Closed) {
        return Err(Error::validation("recorded events must be OPEN or CLOSED"));
    }
    if !(0.0..=1.0).contains(&e.peak_score) {
        return Err(Error::validation("peak_score outside [0, 1]"));
    }
    if e.record_start > e.onset {
        return Err(Error::validation("record_start after onset"));
    }
    match (e.status, e.offset) {
        (EventStatus::Closed, None) => Err(Error::validation("closed event without offset")),
        (_, Some(off)) if off <= e.onset => Err(Error::validation("offset must follow onset")),
        (_, Some(off)) if e.record_end < off => Err(Error::validation("record_end before offset")),
        _ => Ok(()),
    }
}
