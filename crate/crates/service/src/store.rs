use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use agitrack_core::labels::LabelInterval;
use agitrack_realtime::{DetectedEvent, Modality, ScorePoint};
use tokio::sync::broadcast;

use crate::error::{Error, Result};
use crate::log::{read_snapshot, write_snapshot, Entry, LogFile, LogRecord};
use crate::retrain::TrainingSnapshot;
use crate::state::{EventChange, State};
use crate::types::{
    AlertRecord, EventView, JobOutcome, JobStatus, ModelKind, ModelVersion, RetrainJob, ReviewDecision, SessionInfo,
};

pub const LOG_FILE: &str = "events.log";
pub const SNAPSHOT_FILE: &str = "state.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreConfig {
    /// fsync after every record
    pub durable: bool,
    /// records between snapshots; 0 disables them
    pub snapshot_every: u64,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig { durable: true, snapshot_every: 1000 }
    }
}

struct Writer {
    log: LogFile,
    since_snapshot: u64,
}

/// Single-writer event store. Every change is one log record; state is
/// the fold of the log, optionally started from a snapshot.
pub struct Store {
    dir: PathBuf,
    cfg: StoreConfig,
    writer: Mutex<Writer>,
    state: RwLock<State>,
    alerts: broadcast::Sender<AlertRecord>,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>, cfg: StoreConfig) -> Result<Store> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let (log, entries) = LogFile::open(&dir.join(LOG_FILE), cfg.durable)?;
        let last = entries.last().map_or(0, |e| e.seq);
        let mut state = match read_snapshot(&dir.join(SNAPSHOT_FILE)) {
            Some(s) if s.last_seq <= last => s,
            _ => State::default(),
        };
        let from = state.last_seq;
        for e in entries.iter().filter(|e| e.seq > from) {
            state.apply(e)?;
        }
        let (alerts, _) = broadcast::channel(1024);
        Ok(Store {
            dir,
            cfg,
            writer: Mutex::new(Writer { log, since_snapshot: 0 }),
            state: RwLock::new(state),
            alerts,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self) -> PathBuf {
        self.writer.lock().unwrap_or_else(|e| e.into_inner()).log.path().to_path_buf()
    }

    pub fn read<R>(&self, f: impl FnOnce(&State) -> R) -> R {
        f(&self.state.read().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn snapshot(&self) -> State {
        self.read(|s| s.clone())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<AlertRecord> {
        self.alerts.subscribe()
    }

    /// Runs `decide` against the current state under the writer lock and
    /// appends the record it returns, if any.
    fn commit<T>(&self, decide: impl FnOnce(&State) -> Result<(Option<LogRecord>, T)>) -> Result<(T, Option<u64>)> {
        let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let (rec, out) = decide(&self.state.read().unwrap_or_else(|e| e.into_inner()))?;
        let Some(record) = rec else {
            return Ok((out, None));
        };
        let seq = self.read(|s| s.last_seq) + 1;
        let line = w.log.append(&Entry { seq, record })?;
        // apply what a restart would read back, not the in-memory value
        let entry: Entry = serde_json::from_str(line.trim_end())?;
        let mut st = self.state.write().unwrap_or_else(|e| e.into_inner());
        st.apply(&entry)?;
        w.since_snapshot += 1;
        if self.cfg.snapshot_every > 0 && w.since_snapshot >= self.cfg.snapshot_every {
            write_snapshot(&self.dir.join(SNAPSHOT_FILE), &st)?;
            w.since_snapshot = 0;
        }
        Ok((out, Some(seq)))
    }

    /// Returns whether the session was new.
    pub fn register_session(&self, info: SessionInfo, labels: Vec<LabelInterval>) -> Result<bool> {
        let (created, _) = self.commit(|s| {
            let new = s.check_session(&info, &labels)?;
            Ok((new.then(|| LogRecord::SessionRegistered { session: info.clone(), labels: labels.clone() }), new))
        })?;
        Ok(created)
    }

    /// Idempotent on `event_id`. New events are announced on the alert stream.
    pub fn record_event(&self, event: DetectedEvent) -> Result<(EventView, EventChange)> {
        let id = event.event_id.clone();
        let (change, seq) = self.commit(|s| {
            let c = s.check_event(&event)?;
            let rec = (c != EventChange::Unchanged).then(|| LogRecord::EventRecorded { event: event.clone() });
            Ok((rec, c))
        })?;
        if let (EventChange::New, Some(seq)) = (change, seq) {
            // no subscribers is fine
            let _ = self.alerts.send(AlertRecord::of(&event, seq));
        }
        let view = self.read(|s| s.view(&id)).ok_or_else(|| Error::NotFound(id))?;
        Ok((view, change))
    }

    pub fn append_scores(&self, session_id: &str, points: Vec<ScorePoint>) -> Result<()> {
        if points.is_empty() {
            return Ok(());
        }
        self.commit(|s| {
            if !s.sessions.contains_key(session_id) {
                return Err(Error::NotFound(format!("session {session_id}")));
            }
            if points.iter().any(|p| p.modality == Modality::Fused || !(0.0..=1.0).contains(&p.score)) {
                return Err(Error::validation("scores must be WRIST or VIDEO values in [0, 1]"));
            }
            Ok((Some(LogRecord::ScoresAppended { session_id: session_id.to_string(), points: points.clone() }), ()))
        })?;
        Ok(())
    }

    pub fn submit_review(&self, review: ReviewDecision) -> Result<EventView> {
        let id = review.event_id.clone();
        self.commit(|s| {
            let interval = s.check_review(&review)?;
            Ok((Some(LogRecord::ReviewSubmitted { review: review.clone(), interval }), ()))
        })?;
        self.read(|s| s.view(&id)).ok_or_else(|| Error::NotFound(id))
    }

    /// Queues a job unless one of the same kind is queued or running, and
    /// freezes the training labels as of that moment.
    pub fn queue_job(&self, kind: ModelKind) -> Result<(RetrainJob, TrainingSnapshot)> {
        let (out, _) = self.commit(|s| {
            if let Some(j) = s.active_job(kind) {
                return Err(Error::Busy(format!("{} job {} is {:?}", kind, j.job_id, j.status)));
            }
            let n = s.jobs.values().filter(|j| j.kind == kind).count() + 1;
            let job = RetrainJob {
                job_id: format!("{kind}-{n:04}"),
                kind,
                snapshot_id: s.last_seq,
                status: JobStatus::Queued,
                model_version: None,
                snapshot_rows: None,
                auc: None,
                current_auc: None,
                swapped: false,
                swap_withheld: false,
                message: None,
            };
            let snap = TrainingSnapshot::of(s);
            Ok((Some(LogRecord::JobQueued { job: job.clone() }), (job, snap)))
        })?;
        Ok(out)
    }

    pub fn start_job(&self, job_id: &str) -> Result<()> {
        self.commit(|s| match s.jobs.get(job_id) {
            None => Err(Error::NotFound(format!("job {job_id}"))),
            Some(j) if j.status != JobStatus::Queued => Err(Error::InvalidState(format!("job {job_id} is {:?}", j.status))),
            Some(_) => Ok((Some(LogRecord::JobStarted { job_id: job_id.to_string() }), ())),
        })?;
        Ok(())
    }

    pub fn finish_job(&self, job_id: &str, outcome: JobOutcome) -> Result<RetrainJob> {
        self.commit(|s| match s.jobs.get(job_id) {
            None => Err(Error::NotFound(format!("job {job_id}"))),
            Some(j) if !j.status.is_active() => Err(Error::InvalidState(format!("job {job_id} already ended"))),
            Some(_) if !matches!(outcome.status, JobStatus::Done | JobStatus::Failed) => {
                Err(Error::validation("a job ends DONE or FAILED"))
            }
            Some(_) => Ok((Some(LogRecord::JobFinished { job_id: job_id.to_string(), outcome: outcome.clone() }), ())),
        })?;
        self.read(|s| s.jobs.get(job_id).cloned()).ok_or_else(|| Error::NotFound(job_id.to_string()))
    }

    /// Adds a model version. Without a job only the first model of a kind
    /// may be installed, so serving changes otherwise come from retraining.
    pub fn register_model(&self, model: ModelVersion, activate: bool) -> Result<()> {
        self.commit(|s| {
            if model.version != s.next_version(model.kind) {
                return Err(Error::Conflict(format!("{} version {} is not next", model.kind, model.version)));
            }
            match &model.job_id {
                None if s.serving.contains_key(&model.kind) => {
                    return Err(Error::Conflict(format!("a {} model is already serving", model.kind)))
                }
                Some(id) if !s.jobs.get(id).is_some_and(|j| j.status == JobStatus::Running && j.kind == model.kind) => {
                    return Err(Error::InvalidState(format!("job {id} is not a running {} job", model.kind)))
                }
                _ => {}
            }
            Ok((Some(LogRecord::ModelRegistered { model: model.clone(), activate }), ()))
        })?;
        Ok(())
    }
}
