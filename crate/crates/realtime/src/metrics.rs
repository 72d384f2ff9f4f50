use agitrack_core::labels::{LabelClass, LabelInterval};
use agitrack_core::time::secs_to_ms;
use serde::Serialize;

use crate::event::DetectedEvent;

/// Slack around truth intervals when matching events, in seconds.
pub const TRUTH_TOLERANCE_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionSummary {
    pub n_truth: usize,
    pub n_detected: usize,
    pub n_events: usize,
    pub n_false: usize,
    /// absent when there is no truth interval
    pub recall: Option<f64>,
    /// absent when nothing was detected
    pub median_latency_s: Option<f64>,
    pub latencies_s: Vec<f64>,
    pub false_events_per_hour: f64,
}

/// Event-level scoring against agitation truth intervals. A truth interval
/// is detected when some onset falls in `[start - 60 s, end]`; latency is
/// the earliest such onset minus `start`. An event is false when it overlaps
/// no truth interval widened by 60 s on both sides.
pub fn detection_latency(events: &[DetectedEvent], truth: &[LabelInterval], duration_s: f64) -> DetectionSummary {
    let tol = secs_to_ms(TRUTH_TOLERANCE_S);
    let truth: Vec<&LabelInterval> = truth.iter().filter(|t| t.klass == LabelClass::Agitation).collect();
    let mut latencies = Vec::new();
    for t in &truth {
        let lo = t.start.millis() - tol;
        let first = events
            .iter()
            .map(|e| e.onset)
            .filter(|o| o.millis() >= lo && *o <= t.end)
            .min();
        if let Some(o) = first {
            latencies.push(o.secs_since(t.start));
        }
    }
    let n_false = events
        .iter()
        .filter(|e| {
            let end = e.offset.unwrap_or(e.onset).max(e.onset);
            !truth.iter().any(|t| e.onset.millis() < t.end.millis() + tol && end.millis() > t.start.millis() - tol)
        })
        .count();
    let median = if latencies.is_empty() {
        None
    } else {
        let mut v = latencies.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
    };
    let hours = duration_s / 3600.0;
    DetectionSummary {
        n_truth: truth.len(),
        n_detected: latencies.len(),
        n_events: events.len(),
        n_false,
        recall: (!truth.is_empty()).then(|| latencies.len() as f64 / truth.len() as f64),
        median_latency_s: median,
        latencies_s: latencies,
        false_events_per_hour: if hours > 0.0 { n_false as f64 / hours } else { 0.0 },
    }
}
