use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::features::{pose_feature_names, PoseFeatureRow, POSE_FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::ingest::{fmt_sig9, malformed};
use crate::labels::{classify_window, normalize, LabelClass, LabelInterval};
use crate::time::{secs_to_ms, Rate, Timestamp};

/// Sequences with a larger share of invalid steps are dropped.
pub const MAX_INVALID_FRACTION: f64 = 0.2;

/// A held row older than this is not reused for a grid step.
pub const MAX_HOLD_MS: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    pub window_s: f64,
    pub stride_s: f64,
    pub step_hz: Rate,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig { window_s: 30.0, stride_s: 1.0, step_hz: Rate::hz(5) }
    }
}

impl SequenceConfig {
    pub fn steps(&self) -> usize {
        (self.window_s * self.step_hz.as_f64()).round() as usize
    }
}

/// A fixed-length window over a shared grid of feature rows.
#[derive(Debug, Clone)]
pub struct FeatureSequence {
    pub window_start: Timestamp,
    pub klass: LabelClass,
    pub person_id: String,
    rows: Arc<[PoseFeatureRow]>,
    range: Range<usize>,
}

impl FeatureSequence {
    pub fn new(window_start: Timestamp, klass: LabelClass, person_id: String, rows: Arc<[PoseFeatureRow]>, range: Range<usize>) -> Self {
        assert!(range.end <= rows.len());
        FeatureSequence { window_start, klass, person_id, rows, range }
    }

    /// Wraps standalone rows.
    pub fn from_rows(window_start: Timestamp, klass: LabelClass, person_id: impl Into<String>, rows: Vec<PoseFeatureRow>) -> Self {
        let n = rows.len();
        FeatureSequence::new(window_start, klass, person_id.into(), rows.into(), 0..n)
    }

    pub fn steps(&self) -> &[PoseFeatureRow] {
        &self.rows[self.range.clone()]
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Binary target: agitation vs everything else.
    pub fn label(&self) -> bool {
        self.klass == LabelClass::Agitation
    }

    /// Row-major `len × mask.len()` matrix of the selected features.
    pub fn matrix(&self, mask: &FeatureMask) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * mask.len());
        for r in self.steps() {
            out.extend(mask.indices().iter().map(|&i| r.values[i]));
        }
        out
    }
}

/// Ordered subset of the pose feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    indices: Vec<usize>,
}

impl Default for FeatureMask {
    fn default() -> Self {
        FeatureMask::all()
    }
}

impl FeatureMask {
    pub fn all() -> Self {
        FeatureMask { indices: (0..POSE_FEATURE_COUNT).collect() }
    }

    /// Selects features by name, keeping canonical order.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let all = pose_feature_names();
        let mut indices = Vec::with_capacity(names.len());
        for n in names {
            let i = all
                .iter()
                .position(|a| a == n.as_ref())
                .ok_or_else(|| Error::validation(format!("unknown pose feature {:?}", n.as_ref())))?;
            indices.push(i);
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(FeatureMask { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn names(&self) -> Vec<String> {
        let all = pose_feature_names();
        self.indices.iter().map(|&i| all[i].clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Holds the latest row at or before each grid time (`step_hz` from the
/// first row's time). Grid steps with no fresh row are invalid.
pub fn resample_rows(rows: &[PoseFeatureRow], step_hz: Rate) -> Vec<PoseFeatureRow> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let t0 = first.t;
    let last = rows[rows.len() - 1].t;
    let span_ms = last.millis() - t0.millis() + step_hz.period_ms().round() as i64;
    let n = step_hz.samples_in(span_ms);
    let mut out = Vec::with_capacity(n);
    let mut j = 0usize;
    for k in 0..n {
        let g = t0.add_ms(step_hz.offset_ms(k));
        while j + 1 < rows.len() && rows[j + 1].t <= g {
            j += 1;
        }
        let r = rows[j];
        if r.t <= g && g.millis() - r.t.millis() < MAX_HOLD_MS {
            out.push(PoseFeatureRow { t: g, ..r });
        } else {
            out.push(PoseFeatureRow::invalid(g));
        }
    }
    out
}

/// Slides a `window_s` window by `stride_s` over the resampled rows and
/// labels each window by the interval overlap rule.
pub fn build_sequences(
    rows: &[PoseFeatureRow],
    labels: &[LabelInterval],
    person_id: &str,
    cfg: &SequenceConfig,
) -> Result<Vec<FeatureSequence>> {
    if cfg.window_s <= 0.0 || cfg.stride_s <= 0.0 {
        return Err(Error::validation("window and stride must be positive"));
    }
    if rows.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::validation("pose rows must be time-sorted"));
    }
    let labels = normalize(labels)?;
    let grid: Arc<[PoseFeatureRow]> = resample_rows(rows, cfg.step_hz).into();
    let Some(first) = grid.first() else {
        return Ok(Vec::new());
    };
    let t0 = first.t;
    let len = cfg.steps();
    let span_ms = cfg.step_hz.offset_ms(grid.len());
    let window_ms = secs_to_ms(cfg.window_s);
    let stride_ms = secs_to_ms(cfg.stride_s);
    let mut out = Vec::new();
    let mut w = 0i64;
    loop {
        let off = w * stride_ms;
        if off + window_ms > span_ms {
            break;
        }
        let s = cfg.step_hz.index_ceil(off);
        if s + len > grid.len() {
            break;
        }
        let invalid = grid[s..s + len].iter().filter(|r| !r.valid).count();
        if invalid as f64 <= MAX_INVALID_FRACTION * len as f64 {
            let start = t0.add_ms(off);
            let klass = classify_window(&labels, start, start.add_ms(window_ms));
            out.push(FeatureSequence::new(start, klass, person_id.to_string(), grid.clone(), s..s + len));
        }
        w += 1;
    }
    Ok(out)
}

/// In-memory form of a sequence dataset file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceDataset {
    pub names: Vec<String>,
    pub seq_len: usize,
    pub samples: Vec<SequenceSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    pub id: usize,
    pub label: bool,
    /// Row-major `seq_len × names.len()`.
    pub data: Vec<f64>,
}

impl SequenceDataset {
    pub fn from_sequences(seqs: &[FeatureSequence], mask: &FeatureMask) -> Result<Self> {
        let seq_len = seqs.first().map_or(0, |s| s.len());
        if seqs.iter().any(|s| s.len() != seq_len) {
            return Err(Error::validation("sequences differ in length"));
        }
        let samples = seqs
            .iter()
            .enumerate()
            .map(|(id, s)| SequenceSample { id, label: s.label(), data: s.matrix(mask) })
            .collect();
        Ok(SequenceDataset { names: mask.names(), seq_len, samples })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }
}

/// Long format `seq_id,step,feature,value,label` plus a schema sidecar
/// listing the feature names one per line.
pub fn write_sequence_dataset(path: &Path, schema_path: &Path, ds: &SequenceDataset) -> Result<()> {
    let d = ds.dim();
    let mut out = String::from("seq_id,step,feature,value,label\n");
    for s in &ds.samples {
        let label = u8::from(s.label);
        for step in 0..ds.seq_len {
            for (k, name) in ds.names.iter().enumerate() {
                let _ = writeln!(out, "{},{step},{name},{},{label}", s.id, fmt_sig9(s.data[step * d + k]));
            }
        }
    }
    std::fs::write(path, out)?;
    let mut schema = ds.names.join("\n");
    schema.push('\n');
    std::fs::write(schema_path, schema)?;
    Ok(())
}

pub fn read_sequence_dataset(path: &Path, schema_path: &Path) -> Result<SequenceDataset> {
    let names: Vec<String> =
        std::fs::read_to_string(schema_path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    let d = names.len();
    if d == 0 {
        return Err(malformed(schema_path, 1, "schema lists no features"));
    }
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "seq_id,step,feature,value,label")) => {}
        _ => return Err(malformed(path, 1, "header must be seq_id,step,feature,value,label")),
    }
    // seq_id -> (label, step -> values)
    let mut seqs: std::collections::BTreeMap<usize, (bool, Vec<Vec<Option<f64>>>)> = Default::default();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 5 {
            return Err(malformed(path, lineno, "expected 5 cells"));
        }
        let id: usize = c[0].parse().map_err(|_| malformed(path, lineno, "bad seq_id"))?;
        let step: usize = c[1].parse().map_err(|_| malformed(path, lineno, "bad step"))?;
        let k = names.iter().position(|n| n == c[2]).ok_or_else(|| malformed(path, lineno, format!("feature {:?} not in schema", c[2])))?;
        let v: f64 = c[3].parse().map_err(|_| malformed(path, lineno, "bad value"))?;
        let label = match c[4] {
            "0" => false,
            "1" => true,
            _ => return Err(malformed(path, lineno, "label must be 0 or 1")),
        };
        let entry = seqs.entry(id).or_insert_with(|| (label, Vec::new()));
        if entry.0 != label {
            return Err(malformed(path, lineno, "label changes within a sequence"));
        }
        if entry.1.len() <= step {
            entry.1.resize(step + 1, vec![None; d]);
        }
        entry.1[step][k] = Some(v);
    }
    let seq_len = seqs.values().next().map_or(0, |s| s.1.len());
    let mut samples = Vec::with_capacity(seqs.len());
    for (id, (label, steps)) in seqs {
        if steps.len() != seq_len {
            return Err(Error::validation(format!("sequence {id} has {} steps, expected {seq_len}", steps.len())));
        }
        let mut data = Vec::with_capacity(seq_len * d);
        for (s, row) in steps.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                data.push(v.ok_or_else(|| Error::validation(format!("sequence {id} step {s} lacks {}", names[k])))?);
            }
        }
        samples.push(SequenceSample { id, label, data });
    }
    Ok(SequenceDataset { names, seq_len, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelSource;

    fn rows(secs: usize, hz: usize) -> Vec<PoseFeatureRow> {
        (0..secs * hz)
            .map(|i| {
                let mut r = PoseFeatureRow::invalid(Timestamp((i * 1000 / hz) as i64));
                r.valid = true;
                r.values[0] = i as f64;
                r
            })
            .collect()
    }

    #[test]
    fn count_formula() {
        let seqs = build_sequences(&rows(100, 5), &[], "p", &SequenceConfig::default()).unwrap();
        assert_eq!(seqs.len(), 71);
        assert!(seqs.iter().all(|s| s.len() == 150));
        assert_eq!(seqs[1].steps()[0].values[0], 5.0);
    }

    #[test]
    fn all_inside_agitation() {
        let l = [LabelInterval::secs(0.0, 200.0, LabelClass::Agitation, LabelSource::NurseNote)];
        let seqs = build_sequences(&rows(100, 5), &l, "p", &SequenceConfig::default()).unwrap();
        assert!(seqs.iter().all(|s| s.label()));
    }

    #[test]
    fn half_overlap_is_positive() {
        let l = [LabelInterval::secs(25.0, 60.0, LabelClass::Agitation, LabelSource::NurseNote)];
        let seqs = build_sequences(&rows(100, 5), &l, "p", &SequenceConfig::default()).unwrap();
        for s in &seqs {
            let start = s.window_start.as_secs_f64();
            let overlap = (start + 30.0).min(60.0) - start.max(25.0);
            assert_eq!(s.label(), overlap >= 15.0, "window at {start}");
        }
        assert!(seqs[10].label());
    }

    #[test]
    fn too_short_is_empty() {
        assert!(build_sequences(&rows(20, 5), &[], "p", &SequenceConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn invalid_heavy_windows_dropped() {
        let mut r = rows(60, 5);
        for x in r.iter_mut().take(40) {
            x.valid = false;
        }
        let seqs = build_sequences(&r, &[], "p", &SequenceConfig::default()).unwrap();
        // 40 invalid leading steps: windows starting before step 10 exceed 30 invalid steps.
        assert_eq!(seqs.first().unwrap().window_start, Timestamp(2000));
    }

    #[test]
    fn dataset_file_round_trip() {
        let seqs = build_sequences(&rows(32, 5), &[], "p", &SequenceConfig::default()).unwrap();
        let mask = FeatureMask::from_names(&["eu_1", "ang_1_2"]).unwrap();
        let ds = SequenceDataset::from_sequences(&seqs, &mask).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (p, s) = (dir.path().join("seq.csv"), dir.path().join("seq.schema"));
        write_sequence_dataset(&p, &s, &ds).unwrap();
        assert_eq!(read_sequence_dataset(&p, &s).unwrap(), ds);
    }
}
