//! Offline segmentation of complete score traces. Written independently of
//! the streaming state machine and used to cross-check it.

use std::collections::BTreeMap;

use agitrack_core::time::Timestamp;

use crate::engine::fused_event;
use crate::error::{Error, Result};
use crate::event::{
    canonical_order, DetectedEvent, EngineConfig, EventStatus, Fusion, Modality, ScorePoint, SessionBounds,
};

/// Events for complete per-modality traces, in [`canonical_order`].
pub fn segment_batch(
    session_id: &str,
    cfg: &EngineConfig,
    bounds: SessionBounds,
    scores: &[ScorePoint],
) -> Result<Vec<DetectedEvent>> {
    cfg.validate()?;
    let mut by_mod: BTreeMap<Modality, Vec<ScorePoint>> = BTreeMap::new();
    for p in scores {
        if p.modality == Modality::Fused {
            return Err(Error::validation("scores must come from WRIST or VIDEO"));
        }
        by_mod.entry(p.modality).or_default().push(*p);
    }
    let mut events = Vec::new();
    for (m, pts) in &by_mod {
        if let Some(w) = pts.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::NonMonotone { modality: *m, t: w[1].t.millis(), last: w[0].t.millis() });
        }
        events.extend(modality_events(session_id, cfg, &bounds, *m, pts));
    }
    if cfg.fusion == Fusion::Or {
        let fused = fuse(session_id, cfg, &bounds, &events);
        events.extend(fused);
    }
    Ok(canonical_order(&events))
}

/// Maximal runs of positive windows as half-open index ranges.
fn positive_runs(pts: &[ScorePoint], threshold: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, p) in pts.iter().enumerate() {
        match (p.score > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, pts.len()));
    }
    runs
}

/// Index of the point that closes an event whose last positive point is
/// `last_end - 1`: at least `k_off` points later and past that window's end.
/// May be `pts.len()` or beyond when the trace runs out first.
fn close_index(pts: &[ScorePoint], last_end: usize, k_off: usize, win: i64) -> usize {
    let window_end = pts[last_end - 1].t.add_ms(win);
    let mut j = last_end - 1 + k_off;
    while j < pts.len() && pts[j].t < window_end {
        j += 1;
    }
    j
}

fn modality_events(
    session_id: &str,
    cfg: &EngineConfig,
    bounds: &SessionBounds,
    m: Modality,
    pts: &[ScorePoint],
) -> Vec<DetectedEvent> {
    let runs = positive_runs(pts, cfg.threshold);
    let win = cfg.window_ms(m);
    let buffer = (cfg.buffer_s * 1000.0).round() as i64;
    let mut out = Vec::new();
    let mut r = 0;
    while r < runs.len() {
        let (s, e) = runs[r];
        if e - s < cfg.k_on {
            r += 1;
            continue;
        }
        // absorb later runs that start before the event would have closed
        let mut last_end = e;
        r += 1;
        let mut close_idx = close_index(pts, last_end, cfg.k_off, win);
        while r < runs.len() && runs[r].0 <= close_idx {
            last_end = runs[r].1;
            r += 1;
            close_idx = close_index(pts, last_end, cfg.k_off, win);
        }
        let last_pos = pts[last_end - 1].t;
        let (evidence_end, truncated, offset) = if close_idx < pts.len() {
            (close_idx + 1, false, last_pos.add_ms(win))
        } else {
            let last_t = pts[pts.len() - 1].t;
            (pts.len(), true, last_t.max(last_pos.add_ms(win)))
        };
        let evidence = pts[s..evidence_end].to_vec();
        let onset = pts[s].t;
        let (record_start, record_end) = bounds.record(buffer, onset, offset);
        out.push(DetectedEvent {
            event_id: format!("{}:{}{:04}", session_id, m.code(), out.len() + 1),
            session_id: session_id.to_string(),
            onset,
            offset: Some(offset),
            record_start,
            record_end,
            modality: m,
            peak_score: evidence.iter().map(|p| p.score).fold(f64::MIN, f64::max),
            status: EventStatus::Closed,
            truncated,
            members: Vec::new(),
            evidence,
        });
    }
    out
}

/// Groups events whose intervals lie within the merge gap of each other.
fn fuse(session_id: &str, cfg: &EngineConfig, bounds: &SessionBounds, events: &[DetectedEvent]) -> Vec<DetectedEvent> {
    let gap = (cfg.merge_gap_s * 1000.0).round() as i64;
    let mut sorted: Vec<&DetectedEvent> = events.iter().collect();
    sorted.sort_by(|a, b| (a.onset, a.modality).cmp(&(b.onset, b.modality)));
    let mut groups: Vec<Vec<&DetectedEvent>> = Vec::new();
    let mut group_end = Timestamp(i64::MIN);
    for ev in sorted {
        let end = ev.offset.expect("batch events are closed");
        match groups.last_mut() {
            Some(g) if ev.onset.millis() <= group_end.millis() + gap => {
                g.push(ev);
                group_end = group_end.max(end);
            }
            _ => {
                groups.push(vec![ev]);
                group_end = end;
            }
        }
    }
    groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let ends: Vec<Timestamp> = g.iter().map(|e| e.offset.expect("closed")).collect();
            let id = format!("{}:{}{:04}", session_id, Modality::Fused.code(), i + 1);
            fused_event(id, session_id, g, &ends, true, cfg, bounds)
        })
        .collect()
}
