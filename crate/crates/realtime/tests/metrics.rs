use agitrack_core::labels::{LabelClass, LabelInterval, LabelSource};
use agitrack_core::time::Timestamp;
use agitrack_realtime::*;

fn ev(onset_s: f64, offset_s: f64) -> DetectedEvent {
    DetectedEvent {
        event_id: format!("e{onset_s}"),
        session_id: "s".into(),
        onset: Timestamp::from_secs_f64(onset_s),
        offset: Some(Timestamp::from_secs_f64(offset_s)),
        record_start: Timestamp::from_secs_f64(onset_s),
        record_end: Timestamp::from_secs_f64(offset_s),
        modality: Modality::Fused,
        peak_score: 0.9,
        status: EventStatus::Closed,
        truncated: false,
        members: vec![],
        evidence: vec![],
    }
}

fn agit(a: f64, b: f64) -> LabelInterval {
    LabelInterval::secs(a, b, LabelClass::Agitation, LabelSource::SynthTruth)
}

#[test]
fn onset_at_truth_start_has_zero_latency() {
    let s = detection_latency(&[ev(600.0, 700.0)], &[agit(600.0, 780.0)], 3600.0);
    assert_eq!(s.recall, Some(1.0));
    assert_eq!(s.median_latency_s, Some(0.0));
    assert_eq!(s.n_false, 0);
}

#[test]
fn no_events_means_zero_recall_and_no_latency() {
    let s = detection_latency(&[], &[agit(600.0, 780.0)], 3600.0);
    assert_eq!(s.recall, Some(0.0));
    assert_eq!(s.median_latency_s, None);
    assert_eq!(s.false_events_per_hour, 0.0);
}

#[test]
fn one_of_two_detected_at_35s() {
    let truth = [agit(600.0, 780.0), agit(3000.0, 3100.0)];
    let s = detection_latency(&[ev(635.0, 800.0)], &truth, 7200.0);
    assert_eq!(s.recall, Some(0.5));
    assert_eq!(s.median_latency_s, Some(35.0));
}

#[test]
fn tolerance_edges() {
    let truth = [agit(600.0, 780.0)];
    // 60 s early still counts, 61 s does not
    assert_eq!(detection_latency(&[ev(540.0, 700.0)], &truth, 3600.0).median_latency_s, Some(-60.0));
    assert_eq!(detection_latency(&[ev(539.0, 700.0)], &truth, 3600.0).recall, Some(0.0));
    // onset at the truth end counts
    assert_eq!(detection_latency(&[ev(780.0, 900.0)], &truth, 3600.0).recall, Some(1.0));
    // earliest qualifying onset wins
    let s = detection_latency(&[ev(700.0, 720.0), ev(610.0, 650.0)], &truth, 3600.0);
    assert_eq!(s.latencies_s, vec![10.0]);
}

#[test]
fn false_events_counted_per_hour() {
    let truth = [agit(600.0, 780.0)];
    // overlaps the widened truth, detected or not it is not false
    let near = ev(830.0, 900.0);
    let far = ev(2000.0, 2100.0);
    let before = ev(400.0, 539.0);
    let s = detection_latency(&[near, far, before], &truth, 7200.0);
    assert_eq!(s.n_false, 2);
    assert_eq!(s.false_events_per_hour, 1.0);
    assert_eq!(s.recall, Some(0.0));
}

#[test]
fn only_agitation_truth_counts() {
    let pre = LabelInterval::secs(240.0, 600.0, LabelClass::PreAgitation, LabelSource::SynthTruth);
    let s = detection_latency(&[ev(300.0, 400.0)], &[pre, agit(600.0, 780.0)], 3600.0);
    assert_eq!(s.n_truth, 1);
    assert_eq!(s.recall, Some(0.0));
    // 300..400 overlaps [540, 840) only if it reaches 540, so it is false
    assert_eq!(s.n_false, 1);
    let none = detection_latency(&[], &[], 3600.0);
    assert_eq!(none.recall, None);
}
