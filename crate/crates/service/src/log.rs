//! Append-only line-delimited log and state snapshots.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use agitrack_core::labels::LabelInterval;
use agitrack_realtime::{DetectedEvent, ScorePoint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::State;
use crate::types::{JobOutcome, ModelVersion, RetrainJob, ReviewDecision, SessionInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LogRecord {
    SessionRegistered { session: SessionInfo, labels: Vec<LabelInterval> },
    EventRecorded { event: DetectedEvent },
    ScoresAppended { session_id: String, points: Vec<ScorePoint> },
    ReviewSubmitted { review: ReviewDecision, interval: LabelInterval },
    JobQueued { job: RetrainJob },
    JobStarted { job_id: String },
    JobFinished { job_id: String, outcome: JobOutcome },
    ModelRegistered { model: ModelVersion, activate: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub seq: u64,
    #[serde(flatten)]
    pub record: LogRecord,
}

pub(crate) struct LogFile {
    path: PathBuf,
    file: File,
    durable: bool,
}

impl LogFile {
    /// Opens (or creates) the log and returns its entries. A torn final
    /// line without a newline is cut off; any other bad line is an error.
    pub(crate) fn open(path: &Path, durable: bool) -> Result<(Self, Vec<Entry>)> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let mut entries = Vec::new();
        let mut good_len = 0usize;
        let mut offset = 0usize;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let complete = line.ends_with('\n');
            match serde_json::from_str::<Entry>(line.trim_end()) {
                Ok(e) if complete => {
                    let expect = entries.last().map_or(1, |p: &Entry| p.seq + 1);
                    if e.seq != expect {
                        return Err(Error::Corrupt { line: i + 1, msg: format!("sequence {} where {expect} expected", e.seq) });
                    }
                    entries.push(e);
                    good_len = offset + line.len();
                }
                _ if !complete => {
                    log::warn!("dropping torn final log line {}", i + 1);
                }
                Ok(_) => unreachable!(),
                Err(err) => return Err(Error::Corrupt { line: i + 1, msg: err.to_string() }),
            }
            offset += line.len();
        }
        if good_len < text.len() {
            file.set_len(good_len as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok((LogFile { path: path.to_path_buf(), file, durable }, entries))
    }

    /// Writes one entry and returns the exact line written.
    pub(crate) fn append(&mut self, entry: &Entry) -> Result<String> {
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        if self.durable {
            self.file.sync_data()?;
        }
        Ok(line)
    }

    pub(crate) fn path(&self) -> &Path {
        &self.path
    }
}

/// Reads every entry of a log without modifying it.
pub fn read_log(path: &Path) -> Result<Vec<Entry>> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Corrupt { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    seq: u64,
    state: State,
}

pub(crate) fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let text = serde_json::to_string(&SnapshotFile { seq: state.last_seq, state: state.clone() })?;
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Snapshot state, or `None` when missing or unreadable.
pub(crate) fn read_snapshot(path: &Path) -> Option<State> {
    let text = std::fs::read_to_string(path).ok()?;
    match serde_json::from_str::<SnapshotFile>(&text) {
        Ok(s) if s.seq == s.state.last_seq => Some(s.state),
        _ => {
            log::warn!("ignoring unreadable snapshot {}", path.display());
            None
        }
    }
}
