use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fmt_sig9, malformed};
use crate::error::{Error, Result};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Stationary,
    Moving,
}

/// One minute of vendor-style digital biomarkers. Every field but the
/// timestamp may be absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BiomarkerRecord {
    pub t: Timestamp,
    pub pulse_rate_bpm: Option<f64>,
    pub prv_ms: Option<f64>,
    pub resp_rate_bpm: Option<f64>,
    pub activity_counts: Option<u32>,
    pub accel_std: Option<f64>,
    pub steps: Option<u32>,
    pub scl_microsiemens: Option<f64>,
    pub wearing: Option<bool>,
    pub temp_c: Option<f64>,
    pub sleep_stage: Option<u8>,
    pub activity_class: Option<ActivityClass>,
}

pub const BIOMARKERS_HEADER: &str = "t_ms,pulse_rate_bpm,prv_ms,resp_rate_bpm,activity_counts,accel_std,steps,scl_us,wearing,temp_c,sleep_stage,activity_class";

fn opt<T: std::str::FromStr>(cell: &str, name: &str, path: &Path, line: usize) -> Result<Option<T>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| malformed(path, line, format!("bad {name} {cell:?}")))
}

pub fn parse_biomarkers(path: &Path) -> Result<Vec<BiomarkerRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == BIOMARKERS_HEADER => {}
        _ => return Err(malformed(path, 1, format!("expected header {BIOMARKERS_HEADER:?}"))),
    }
    let mut out: Vec<BiomarkerRecord> = Vec::new();
    for (n, line) in lines {
        let ln = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').map(str::trim).collect();
        if c.len() != 12 {
            return Err(malformed(path, ln, format!("expected 12 columns, got {}", c.len())));
        }
        let t: i64 = c[0].parse().map_err(|_| malformed(path, ln, format!("bad t_ms {:?}", c[0])))?;
        if out.last().is_some_and(|p| p.t.millis() >= t) {
            return Err(malformed(path, ln, "biomarker timestamps must increase"));
        }
        let activity_class = match c[11] {
            "" => None,
            "stationary" => Some(ActivityClass::Stationary),
            "moving" => Some(ActivityClass::Moving),
            other => return Err(malformed(path, ln, format!("bad activity_class {other:?}"))),
        };
        let rec = BiomarkerRecord {
            t: Timestamp(t),
            pulse_rate_bpm: opt(c[1], "pulse_rate_bpm", path, ln)?,
            prv_ms: opt(c[2], "prv_ms", path, ln)?,
            resp_rate_bpm: opt(c[3], "resp_rate_bpm", path, ln)?,
            activity_counts: opt(c[4], "activity_counts", path, ln)?,
            accel_std: opt(c[5], "accel_std", path, ln)?,
            steps: opt(c[6], "steps", path, ln)?,
            scl_microsiemens: opt(c[7], "scl_us", path, ln)?,
            wearing: opt(c[8], "wearing", path, ln)?,
            temp_c: opt(c[9], "temp_c", path, ln)?,
            sleep_stage: opt(c[10], "sleep_stage", path, ln)?,
            activity_class,
        };
        if rec.scl_microsiemens.is_some_and(|v| v < 0.0) {
            return Err(malformed(path, ln, "scl_us must be non-negative"));
        }
        if rec.temp_c.is_some_and(|v| !(20.0..=45.0).contains(&v)) {
            return Err(malformed(path, ln, "temp_c outside [20, 45]"));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn format_biomarkers(records: &[BiomarkerRecord]) -> String {
    fn f(v: Option<f64>) -> String {
        v.map(fmt_sig9).unwrap_or_default()
    }
    fn u<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = String::from(BIOMARKERS_HEADER);
    out.push('\n');
    for r in records {
        let class = match r.activity_class {
            Some(ActivityClass::Moving) => "moving",
            Some(ActivityClass::Stationary) => "stationary",
            None => "",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t.millis(),
            f(r.pulse_rate_bpm),
            f(r.prv_ms),
            f(r.resp_rate_bpm),
            u(r.activity_counts),
            f(r.accel_std),
            u(r.steps),
            f(r.scl_microsiemens),
            u(r.wearing),
            f(r.temp_c),
            u(r.sleep_stage),
            class
        )
        .unwrap();
    }
    out
}

pub fn write_biomarkers(path: &Path, records: &[BiomarkerRecord]) -> Result<()> {
    fs::write(path, format_biomarkers(records))?;
    Ok(())
}

pub const KEYPOINT_COUNT: usize = 18;

/// A 2-D body joint in pixels. `c == 0` marks a missing detection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub c: f64,
}

/// One 18-point skeleton (COCO/OpenPose layout, neck at index 1) of one
/// tracked person.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointFrame {
    pub t: Timestamp,
    pub person_id: String,
    pub points: [Keypoint; KEYPOINT_COUNT],
}

#[derive(Serialize, Deserialize)]
struct KeypointLine {
    t_ms: i64,
    person_id: String,
    kp: Vec<[f64; 3]>,
}

impl KeypointFrame {
    fn from_line(line: KeypointLine) -> std::result::Result<Self, String> {
        if line.kp.len() != KEYPOINT_COUNT {
            return Err(format!("expected {KEYPOINT_COUNT} keypoints, got {}", line.kp.len()));
        }
        let mut points = [Keypoint::default(); KEYPOINT_COUNT];
        for (p, [x, y, c]) in points.iter_mut().zip(line.kp) {
            *p = Keypoint { x, y, c: if c.is_finite() { c.clamp(0.0, 1.0) } else { 0.0 } };
        }
        Ok(KeypointFrame { t: Timestamp(line.t_ms), person_id: line.person_id, points })
    }

    fn to_line(&self) -> KeypointLine {
        KeypointLine {
            t_ms: self.t.millis(),
            person_id: self.person_id.clone(),
            kp: self.points.iter().map(|p| [p.x, p.y, p.c]).collect(),
        }
    }
}

pub fn parse_keypoints(path: &Path) -> Result<Vec<KeypointFrame>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out: Vec<KeypointFrame> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: KeypointLine = serde_json::from_str(&line).map_err(|e| malformed(path, n + 1, e.to_string()))?;
        let frame = KeypointFrame::from_line(parsed).map_err(|e| malformed(path, n + 1, e))?;
        if let Some(prev) = out.iter().rev().find(|f| f.person_id == frame.person_id) {
            if frame.t <= prev.t {
                return Err(malformed(path, n + 1, format!("frame time {} not after {} for {}", frame.t, prev.t, frame.person_id)));
            }
        }
        out.push(frame);
    }
    Ok(out)
}

pub fn write_keypoints(path: &Path, frames: &[KeypointFrame]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for f in frames {
        serde_json::to_writer(&mut w, &f.to_line()).map_err(Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keypoint_frames_keep_18_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keypoints.jsonl");
        let kp: Vec<String> = (0..18).map(|i| format!("[{i},{},{}]", i * 2, if i % 3 == 0 { 1.7 } else { 0.0 })).collect();
        std::fs::write(&path, format!("{{\"t_ms\":0,\"person_id\":\"a\",\"kp\":[{}]}}\n", kp.join(","))).unwrap();
        let frames = parse_keypoints(&path).unwrap();
        assert_eq!(frames[0].points.len(), 18);
        assert_eq!(frames[0].points[0].c, 1.0);
        assert_eq!(frames[0].points[1].c, 0.0);

        std::fs::write(&path, "{\"t_ms\":0,\"person_id\":\"a\",\"kp\":[[1,2,1]]}\n").unwrap();
        assert!(matches!(parse_keypoints(&path), Err(Error::Malformed { line: 1, .. })));
    }
}
