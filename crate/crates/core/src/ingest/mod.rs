//! Session directory layout and its parsers.
//!
//! A session directory holds one CSV per raw channel (`eda.csv`, `acc.csv`,
//! `temp.csv`, `bvp.csv`, `hr.csv`), optional vendor biomarkers
//! (`biomarkers.csv`), keypoint frames (`keypoints.jsonl`), label files
//! (`labels.csv`, `truth.csv`) and a `session.meta` key=value file.

mod raw;
mod records;
mod resample;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{self, LabelClass, LabelInterval, LabelSource};
use crate::series::{acc_magnitude, Channel, SampleSeries};
use crate::time::Timestamp;

pub use raw::{parse_channel_file, write_channel_file, RawFile};
pub use records::{
    parse_biomarkers, parse_keypoints, write_biomarkers, write_keypoints, ActivityClass, BiomarkerRecord, Keypoint,
    KeypointFrame, KEYPOINT_COUNT,
};
pub use resample::resample_hold;

pub const META_FILE: &str = "session.meta";
pub const BIOMARKERS_FILE: &str = "biomarkers.csv";
pub const KEYPOINTS_FILE: &str = "keypoints.jsonl";
pub const LABELS_FILE: &str = "labels.csv";
pub const TRUTH_FILE: &str = "truth.csv";

/// Raw channel files and the channels each provides.
const RAW_FILES: [(&str, RawFile); 5] = [
    ("eda.csv", RawFile::Single(Channel::Eda)),
    ("acc.csv", RawFile::Acc),
    ("temp.csv", RawFile::Single(Channel::Temp)),
    ("bvp.csv", RawFile::Single(Channel::Bvp)),
    ("hr.csv", RawFile::Single(Channel::Hr)),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub participant_id: String,
    pub t0: Timestamp,
    pub duration_s: f64,
    /// Per-source clock offset added to label timestamps on load.
    #[serde(default)]
    pub clock_offsets_ms: BTreeMap<LabelSource, i64>,
}

impl SessionMeta {
    pub fn end(&self) -> Timestamp {
        self.t0.add_secs(self.duration_s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub meta: SessionMeta,
    pub series: BTreeMap<Channel, SampleSeries>,
    pub biomarkers: Vec<BiomarkerRecord>,
    pub keypoints: Vec<KeypointFrame>,
    pub labels: Vec<LabelInterval>,
}

impl Session {
    pub fn channel(&self, c: Channel) -> Result<&SampleSeries> {
        self.series.get(&c).ok_or(Error::MissingChannel(c))
    }

    pub fn span(&self) -> (Timestamp, Timestamp) {
        (self.meta.t0, self.meta.end())
    }

    /// Person ids present in the keypoint stream, in first-seen order.
    pub fn person_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for f in &self.keypoints {
            if !ids.contains(&f.person_id) {
                ids.push(f.person_id.clone());
            }
        }
        ids
    }

    pub fn frames_for(&self, person_id: &str) -> Vec<KeypointFrame> {
        self.keypoints.iter().filter(|f| f.person_id == person_id).cloned().collect()
    }
}

/// Formats a value with 9 significant digits, shortest form.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".to_string() } else { v.to_string() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    format!("{rounded}")
}

pub fn load_session(dir: impl AsRef<Path>) -> Result<Session> {
    let dir = dir.as_ref();
    let mut series = BTreeMap::new();
    let mut have_raw = false;

    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv")
            && !name.starts_with('_')
            && !RAW_FILES.iter().any(|(f, _)| *f == name)
            && ![BIOMARKERS_FILE, LABELS_FILE, TRUTH_FILE].contains(&name.as_str())
        {
            return Err(Error::UnknownChannel(name.trim_end_matches(".csv").to_string()));
        }
    }

    for (file, kind) in RAW_FILES {
        let path = dir.join(file);
        if !path.exists() {
            continue;
        }
        have_raw = true;
        for s in parse_channel_file(&path, kind)? {
            series.insert(s.channel, s);
        }
    }
    if let (Some(x), Some(y), Some(z)) = (series.get(&Channel::AccX), series.get(&Channel::AccY), series.get(&Channel::AccZ)) {
        let mag = acc_magnitude(x, y, z)?;
        series.insert(Channel::AccMag, mag);
    }

    let kp_path = dir.join(KEYPOINTS_FILE);
    let keypoints = if kp_path.exists() { parse_keypoints(&kp_path)? } else { Vec::new() };
    if !have_raw && keypoints.is_empty() && !kp_path.exists() {
        return Err(Error::validation(format!("{}: no raw channel or keypoint file", dir.display())));
    }

    let bio_path = dir.join(BIOMARKERS_FILE);
    let biomarkers = if bio_path.exists() { parse_biomarkers(&bio_path)? } else { Vec::new() };

    let meta_path = dir.join(META_FILE);
    let mut meta = if meta_path.exists() { parse_meta(&meta_path)? } else { default_meta(dir) };

    let mut raw_labels = Vec::new();
    for file in [LABELS_FILE, TRUTH_FILE] {
        let path = dir.join(file);
        if path.exists() {
            raw_labels.extend(parse_labels(&path)?);
        }
    }
    for l in &mut raw_labels {
        if let Some(off) = meta.clock_offsets_ms.get(&l.source) {
            l.start = l.start.add_ms(*off);
            l.end = l.end.add_ms(*off);
        }
    }
    let labels = labels::normalize(&raw_labels)?;

    let data_start = series
        .values()
        .map(|s| s.start)
        .chain(keypoints.iter().map(|k| k.t))
        .min();
    let data_end = series
        .values()
        .map(|s| s.end())
        .chain(keypoints.last().map(|k| k.t.add_ms(1)))
        .max();
    if !meta_path.exists() {
        if let Some(s) = data_start {
            meta.t0 = s;
        }
    }
    if meta.duration_s <= 0.0 {
        if let Some(e) = data_end {
            meta.duration_s = e.secs_since(meta.t0).max(0.001);
        }
    }

    Ok(Session { meta, series, biomarkers, keypoints, labels })
}

/// Writes `session` in the layout [`load_session`] reads.
pub fn write_session(session: &Session, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join(META_FILE), format_meta(&session.meta))?;
    for (file, kind) in RAW_FILES {
        match kind {
            RawFile::Acc => {
                if let (Some(x), Some(y), Some(z)) = (
                    session.series.get(&Channel::AccX),
                    session.series.get(&Channel::AccY),
                    session.series.get(&Channel::AccZ),
                ) {
                    write_channel_file(&dir.join(file), &[x, y, z])?;
                }
            }
            RawFile::Single(c) => {
                if let Some(s) = session.series.get(&c) {
                    write_channel_file(&dir.join(file), &[s])?;
                }
            }
        }
    }
    if !session.biomarkers.is_empty() {
        write_biomarkers(&dir.join(BIOMARKERS_FILE), &session.biomarkers)?;
    }
    if !session.keypoints.is_empty() {
        write_keypoints(&dir.join(KEYPOINTS_FILE), &session.keypoints)?;
    }
    let unshift = |l: &LabelInterval| {
        let off = session.meta.clock_offsets_ms.get(&l.source).copied().unwrap_or(0);
        LabelInterval { start: l.start.add_ms(-off), end: l.end.add_ms(-off), ..*l }
    };
    let (truth, notes): (Vec<LabelInterval>, Vec<LabelInterval>) =
        session.labels.iter().map(unshift).partition(|l| l.source == LabelSource::SynthTruth);
    if !notes.is_empty() {
        write_labels(&dir.join(LABELS_FILE), &notes)?;
    }
    if !truth.is_empty() {
        write_labels(&dir.join(TRUTH_FILE), &truth)?;
    }
    Ok(())
}

fn default_meta(dir: &Path) -> SessionMeta {
    let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "session".into());
    SessionMeta {
        session_id: id.clone(),
        participant_id: id,
        t0: Timestamp::ZERO,
        duration_s: 0.0,
        clock_offsets_ms: BTreeMap::new(),
    }
}

pub fn parse_meta(path: &Path) -> Result<SessionMeta> {
    let text = fs::read_to_string(path)?;
    let mut meta = default_meta(path.parent().unwrap_or(Path::new(".")));
    let mut saw_t0 = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |msg: String| Error::Malformed { file: path.to_path_buf(), line: n + 1, msg };
        let (k, v) = line.split_once('=').ok_or_else(|| malformed(format!("expected key=value, got {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "session_id" => meta.session_id = v.to_string(),
            "participant_id" => meta.participant_id = v.to_string(),
            "t0_ms" => {
                let t: i64 = v.parse().map_err(|_| malformed(format!("bad t0_ms {v:?}")))?;
                if t < 0 {
                    return Err(malformed("t0_ms must be non-negative".into()));
                }
                meta.t0 = Timestamp(t);
                saw_t0 = true;
            }
            "duration_s" => {
                meta.duration_s = v.parse().map_err(|_| malformed(format!("bad duration_s {v:?}")))?;
            }
            _ if k.starts_with("clock_offset_ms.") => {
                let source: LabelSource = k["clock_offset_ms.".len()..].parse().map_err(|e: Error| malformed(e.to_string()))?;
                let off: i64 = v.parse().map_err(|_| malformed(format!("bad offset {v:?}")))?;
                meta.clock_offsets_ms.insert(source, off);
            }
            _ => return Err(malformed(format!("unknown key {k:?}"))),
        }
    }
    if !saw_t0 {
        return Err(Error::Malformed { file: path.to_path_buf(), line: 0, msg: "missing t0_ms".into() });
    }
    Ok(meta)
}

pub fn format_meta(meta: &SessionMeta) -> String {
    let mut out = format!(
        "session_id={}\nparticipant_id={}\nt0_ms={}\nduration_s={}\n",
        meta.session_id,
        meta.participant_id,
        meta.t0.millis(),
        fmt_sig9(meta.duration_s)
    );
    for (src, off) in &meta.clock_offsets_ms {
        out.push_str(&format!("clock_offset_ms.{src}={off}\n"));
    }
    out
}

pub const LABELS_HEADER: &str = "start_ms,end_ms,class,source";

pub fn parse_labels(path: &Path) -> Result<Vec<LabelInterval>> {
    let text = fs::read_to_string(path)?;
    parse_labels_str(&text, path)
}

pub fn parse_labels_str(text: &str, path: &Path) -> Result<Vec<LabelInterval>> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == LABELS_HEADER => {}
        other => {
            return Err(Error::Malformed {
                file: path.to_path_buf(),
                line: 1,
                msg: format!("expected header {LABELS_HEADER:?}, got {:?}", other.map(|o| o.1).unwrap_or("")),
            })
        }
    }
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |msg: String| Error::Malformed { file: path.to_path_buf(), line: n + 1, msg };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(malformed(format!("expected 4 columns, got {}", cols.len())));
        }
        let start: i64 = cols[0].parse().map_err(|_| malformed(format!("bad start_ms {:?}", cols[0])))?;
        let end: i64 = cols[1].parse().map_err(|_| malformed(format!("bad end_ms {:?}", cols[1])))?;
        let klass: LabelClass = cols[2].parse().map_err(|e: Error| malformed(e.to_string()))?;
        let source: LabelSource = cols[3].parse().map_err(|e: Error| malformed(e.to_string()))?;
        out.push(LabelInterval::new(Timestamp(start), Timestamp(end), klass, source).map_err(|e| malformed(e.to_string()))?);
    }
    Ok(out)
}

pub fn format_labels(labels: &[LabelInterval]) -> String {
    let mut out = String::from(LABELS_HEADER);
    out.push('\n');
    for l in labels {
        out.push_str(&format!("{},{},{},{}\n", l.start.millis(), l.end.millis(), l.klass, l.source));
    }
    out
}

pub fn write_labels(path: &Path, labels: &[LabelInterval]) -> Result<()> {
    fs::write(path, format_labels(labels))?;
    Ok(())
}

pub(crate) fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed { file: PathBuf::from(path), line, msg: msg.into() }
}
