//! Label intervals and the window-labeling rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{secs_to_ms, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelClass {
    Normal,
    PreAgitation,
    Agitation,
}

impl LabelClass {
    pub fn name(self) -> &'static str {
        match self {
            LabelClass::Normal => "normal",
            LabelClass::PreAgitation => "pre_agitation",
            LabelClass::Agitation => "agitation",
        }
    }
}

impl fmt::Display for LabelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(LabelClass::Normal),
            "pre_agitation" => Ok(LabelClass::PreAgitation),
            "agitation" => Ok(LabelClass::Agitation),
            other => Err(Error::validation(format!("unknown label class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    NurseNote,
    VideoReview,
    ManualPreagitation,
    SynthTruth,
}

impl LabelSource {
    pub const ALL: [LabelSource; 4] =
        [LabelSource::NurseNote, LabelSource::VideoReview, LabelSource::ManualPreagitation, LabelSource::SynthTruth];

    pub fn name(self) -> &'static str {
        match self {
            LabelSource::NurseNote => "nurse_note",
            LabelSource::VideoReview => "video_review",
            LabelSource::ManualPreagitation => "manual_preagitation",
            LabelSource::SynthTruth => "synth_truth",
        }
    }
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LabelSource::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown label source {s:?}")))
    }
}

/// A half-open `[start, end)` labeled interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelInterval {
    pub start: Timestamp,
    pub end: Timestamp,
    pub klass: LabelClass,
    pub source: LabelSource,
}

impl LabelInterval {
    pub fn new(start: Timestamp, end: Timestamp, klass: LabelClass, source: LabelSource) -> Result<Self> {
        if start >= end {
            return Err(Error::validation(format!("label interval [{start}, {end}) is empty")));
        }
        Ok(LabelInterval { start, end, klass, source })
    }

    pub fn secs(start_s: f64, end_s: f64, klass: LabelClass, source: LabelSource) -> Self {
        LabelInterval { start: Timestamp::from_secs_f64(start_s), end: Timestamp::from_secs_f64(end_s), klass, source }
    }

    pub fn duration_ms(&self) -> i64 {
        self.end.millis() - self.start.millis()
    }

    pub fn overlap_ms(&self, from: Timestamp, to: Timestamp) -> i64 {
        (self.end.min(to).millis() - self.start.max(from).millis()).max(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub window_start: Timestamp,
    pub window_len_s: f64,
    pub klass: LabelClass,
}

/// Merges same-class intervals that overlap or sit closer than `gap_s`.
///
/// The merged interval keeps the source of its earliest member. Output is
/// sorted by start time.
pub fn merge_intervals(intervals: &[LabelInterval], gap_s: f64) -> Vec<LabelInterval> {
    let gap_ms = secs_to_ms(gap_s.max(0.0));
    let mut out = Vec::new();
    for klass in [LabelClass::Normal, LabelClass::PreAgitation, LabelClass::Agitation] {
        let mut same: Vec<LabelInterval> = intervals.iter().copied().filter(|i| i.klass == klass).collect();
        same.sort_by_key(|i| (i.start, i.end));
        let mut iter = same.into_iter();
        let Some(mut cur) = iter.next() else { continue };
        for next in iter {
            let gap = next.start.millis() - cur.end.millis();
            if gap < 0 || gap < gap_ms {
                cur.end = cur.end.max(next.end);
            } else {
                out.push(cur);
                cur = next;
            }
        }
        out.push(cur);
    }
    out.sort_by_key(|i| (i.start, i.end, i.klass));
    out
}

/// Merges overlapping same-class intervals within each source and rejects
/// sources whose intervals of different classes still overlap.
pub fn normalize(intervals: &[LabelInterval]) -> Result<Vec<LabelInterval>> {
    let mut out = Vec::new();
    for source in LabelSource::ALL {
        let of_source: Vec<LabelInterval> = intervals.iter().copied().filter(|i| i.source == source).collect();
        let merged = merge_intervals(&of_source, 0.0);
        check_disjoint(&merged)?;
        out.extend(merged);
    }
    out.sort_by_key(|i| (i.start, i.end, i.klass, i.source));
    Ok(out)
}

fn check_disjoint(same_source: &[LabelInterval]) -> Result<()> {
    let mut sorted = same_source.to_vec();
    sorted.sort_by_key(|i| (i.start, i.end));
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::validation(format!(
                "overlapping {} intervals [{}, {}) {} and [{}, {}) {}",
                pair[0].source, pair[0].start, pair[0].end, pair[0].klass, pair[1].start, pair[1].end, pair[1].klass
            )));
        }
    }
    Ok(())
}

/// Length of the union of `class` intervals intersected with `[from, to)`.
pub fn class_overlap_ms(intervals: &[LabelInterval], klass: LabelClass, from: Timestamp, to: Timestamp) -> i64 {
    let mut clipped: Vec<(i64, i64)> = intervals
        .iter()
        .filter(|i| i.klass == klass)
        .map(|i| (i.start.max(from).millis(), i.end.min(to).millis()))
        .filter(|(a, b)| a < b)
        .collect();
    clipped.sort_unstable();
    let mut total = 0;
    let mut cur: Option<(i64, i64)> = None;
    for (a, b) in clipped {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total
}

/// Class of the window `[from, to)`: agitation if at least half of it is
/// covered by agitation intervals, else pre-agitation by the same rule,
/// else normal.
pub fn classify_window(intervals: &[LabelInterval], from: Timestamp, to: Timestamp) -> LabelClass {
    let len = to.millis() - from.millis();
    for klass in [LabelClass::Agitation, LabelClass::PreAgitation] {
        if 2 * class_overlap_ms(intervals, klass, from, to) >= len {
            return klass;
        }
    }
    LabelClass::Normal
}

/// Labels every window position of length `window_len_s`, advancing by
/// `stride_s`, that fits inside `span`.
pub fn label_windows(
    intervals: &[LabelInterval],
    window_len_s: f64,
    stride_s: f64,
    span: (Timestamp, Timestamp),
) -> Result<Vec<WindowLabel>> {
    if !(window_len_s > 0.0) || !(stride_s > 0.0) {
        return Err(Error::validation("window length and stride must be positive"));
    }
    for source in LabelSource::ALL {
        let of_source: Vec<LabelInterval> = intervals.iter().copied().filter(|i| i.source == source).collect();
        check_disjoint(&of_source)?;
    }
    let window_ms = secs_to_ms(window_len_s);
    let stride_ms = secs_to_ms(stride_s).max(1);
    let (from, to) = span;
    let span_ms = to.millis() - from.millis();
    if span_ms < window_ms {
        return Ok(Vec::new());
    }
    let count = (span_ms - window_ms) / stride_ms + 1;
    Ok((0..count)
        .map(|k| {
            let start = from.add_ms(k * stride_ms);
            WindowLabel { window_start: start, window_len_s, klass: classify_window(intervals, start, start.add_ms(window_ms)) }
        })
        .collect())
}
