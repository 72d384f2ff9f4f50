//! Reference rule for flagging the physiological run-up to agitation:
//! movement above a count threshold while heart rate is climbing.

use agitrack_core::ingest::Session;
use agitrack_core::series::Channel;
use agitrack_core::time::Timestamp;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreAgitationDetector {
    /// flag needs activity counts strictly above this
    pub counts_threshold: f64,
    /// and a least-squares HR slope above this, in bpm per minute
    pub hr_slope_bpm_per_min: f64,
    /// minutes of history in the slope fit besides the current one
    pub slope_window_min: usize,
}

impl Default for PreAgitationDetector {
    fn default() -> Self {
        PreAgitationDetector { counts_threshold: 8.0, hr_slope_bpm_per_min: 0.5, slope_window_min: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinuteFlag {
    pub t: Timestamp,
    pub counts: f64,
    pub hr_mean: Option<f64>,
    pub hr_slope: Option<f64>,
    pub flagged: bool,
}

fn slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        num += dx * (v - ym);
        den += dx * dx;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// One flag per biomarker minute. HR comes from the HR channel's minute
/// mean, falling back to the minute's pulse rate.
pub fn preagitation_flags(session: &Session, det: &PreAgitationDetector) -> Vec<MinuteFlag> {
    let hr = session.series.get(&Channel::Hr);
    let mut out: Vec<MinuteFlag> = Vec::with_capacity(session.biomarkers.len());
    let mut hist: Vec<Option<f64>> = Vec::new();
    for rec in &session.biomarkers {
        let from_channel = hr.and_then(|s| {
            let r = s.index_range(rec.t, rec.t.add_ms(60_000));
            let v: Vec<f64> = r.filter(|&i| s.valid[i]).map(|i| s.values[i]).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        });
        let hr_mean = from_channel.or(rec.pulse_rate_bpm);
        hist.push(hr_mean);
        let k = det.slope_window_min + 1;
        let hr_slope = if hist.len() >= k {
            let tail = &hist[hist.len() - k..];
            if tail.iter().all(|v| v.is_some()) {
                Some(slope(&tail.iter().map(|v| v.unwrap_or_default()).collect::<Vec<_>>()))
            } else {
                None
            }
        } else {
            None
        };
        let counts = rec.activity_counts.map_or(0.0, f64::from);
        let flagged = counts > det.counts_threshold && hr_slope.is_some_and(|s| s > det.hr_slope_bpm_per_min);
        out.push(MinuteFlag { t: rec.t, counts, hr_mean, hr_slope, flagged });
    }
    out
}

/// Seconds between the start of the flagged run that reaches `onset` and
/// `onset`. The run must include the last minute starting before onset.
pub fn preagitation_lead(flags: &[MinuteFlag], onset: Timestamp) -> Option<f64> {
    let last = flags.iter().rposition(|f| f.t < onset)?;
    if !flags[last].flagged {
        return None;
    }
    let mut first = last;
    while first > 0 && flags[first - 1].flagged {
        first -= 1;
    }
    Some(onset.secs_since(flags[first].t))
}
