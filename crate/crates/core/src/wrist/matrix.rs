use std::path::Path;

use super::features::{extract_window_features, window_starts, ChannelSet, FeatureConfig, WINDOW_LEN_S};
use crate::error::{Error, Result};
use crate::ingest::{fmt_sig9, malformed, BiomarkerRecord};
use crate::labels::{classify_window, normalize, LabelClass, LabelInterval};
use crate::time::{secs_to_ms, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub window_start: Timestamp,
    pub values: Vec<f64>,
    /// Absent when the session carries no labels.
    pub label: Option<LabelClass>,
    pub valid_fraction: f64,
}

/// Per-window wrist features of one or more sessions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    /// Extracts one row per window position. Labels follow the window
    /// overlap rule; `labels = None` leaves every row unlabeled.
    pub fn from_channels(
        channels: &ChannelSet,
        biomarkers: &[BiomarkerRecord],
        labels: Option<&[LabelInterval]>,
        stride_s: f64,
        cfg: FeatureConfig,
    ) -> Result<Self> {
        let labels = labels.map(normalize).transpose()?;
        let window_ms = secs_to_ms(WINDOW_LEN_S);
        let mut rows = Vec::new();
        for start in window_starts(channels, stride_s) {
            let mut fv = extract_window_features(channels, start)?;
            if cfg.append_biomarkers {
                let rec = biomarkers
                    .iter()
                    .find(|r| r.t <= start && start < r.t.add_ms(60_000))
                    .cloned()
                    .unwrap_or(BiomarkerRecord { t: start, ..Default::default() });
                fv.append_biomarkers(&rec);
            }
            let label = labels.as_ref().map(|l| classify_window(l, start, start.add_ms(window_ms)));
            rows.push(FeatureRow { window_start: start, values: fv.values, label, valid_fraction: fv.valid_fraction });
        }
        Ok(FeatureMatrix { names: cfg.names(), rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn format_feature_matrix(m: &FeatureMatrix) -> String {
    let mut out = String::from("window_start_ms");
    for n in &m.names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",label,valid_fraction\n");
    for r in &m.rows {
        out.push_str(&r.window_start.millis().to_string());
        for v in &r.values {
            out.push(',');
            out.push_str(&fmt_sig9(*v));
        }
        out.push(',');
        if let Some(l) = r.label {
            out.push_str(l.name());
        }
        out.push(',');
        out.push_str(&fmt_sig9(r.valid_fraction));
        out.push('\n');
    }
    out
}

pub fn write_feature_matrix(path: &Path, m: &FeatureMatrix) -> Result<()> {
    std::fs::write(path, format_feature_matrix(m))?;
    Ok(())
}

pub fn read_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.len();
    if n < 3 || cols[0] != "window_start_ms" || cols[n - 2] != "label" || cols[n - 1] != "valid_fraction" {
        return Err(malformed(path, 1, "header must be window_start_ms,<features>,label,valid_fraction"));
    }
    let names: Vec<String> = cols[1..n - 2].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(malformed(path, lineno, &format!("expected {n} cells, found {}", cells.len())));
        }
        let t: i64 = cells[0].parse().map_err(|_| malformed(path, lineno, "bad window_start_ms"))?;
        let mut values = Vec::with_capacity(names.len());
        for c in &cells[1..n - 2] {
            let v: f64 = c.parse().map_err(|_| malformed(path, lineno, &format!("bad value {c:?}")))?;
            if !v.is_finite() {
                return Err(malformed(path, lineno, "non-finite value"));
            }
            values.push(v);
        }
        let label = match cells[n - 2] {
            "" => None,
            s => Some(s.parse::<LabelClass>().map_err(|e| match e {
                Error::Validation(m) => malformed(path, lineno, &m),
                other => other,
            })?),
        };
        let valid_fraction: f64 = cells[n - 1].parse().map_err(|_| malformed(path, lineno, "bad valid_fraction"))?;
        rows.push(FeatureRow { window_start: Timestamp(t), values, label, valid_fraction });
    }
    Ok(FeatureMatrix { names, rows })
}
