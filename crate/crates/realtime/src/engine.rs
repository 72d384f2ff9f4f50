use agitrack_core::time::Timestamp;

use crate::error::{Error, Result};
use crate::event::{
    Alert, DetectedEvent, EngineConfig, EventStatus, Fusion, Modality, ScorePoint, SessionBounds, Transition,
    TransitionKind,
};
use crate::sink::EngineSink;

/// What one push (or `finish`) changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutput {
    pub transitions: Vec<Transition>,
    pub alerts: Vec<Alert>,
}

impl StepOutput {
    pub fn opened(&self) -> impl Iterator<Item = &DetectedEvent> {
        self.transitions.iter().filter(|t| t.kind == TransitionKind::Opened).map(|t| &t.event)
    }

    pub fn closed(&self) -> impl Iterator<Item = &DetectedEvent> {
        self.transitions.iter().filter(|t| t.kind == TransitionKind::Closed).map(|t| &t.event)
    }
}

#[derive(Debug, Default, Clone)]
struct ModState {
    last_t: Option<Timestamp>,
    /// positive run not yet long enough to open an event
    run: Vec<ScorePoint>,
    open: Option<usize>,
    neg: usize,
    last_pos: Timestamp,
    counter: u32,
}

#[derive(Debug, Default, Clone)]
struct FusionState {
    /// index of the fused event still accepting members
    active: Option<usize>,
    members: Vec<usize>,
    /// opened per-modality events not yet assigned to a fused event
    pending: Vec<usize>,
    counter: u32,
}

/// Per-session streaming detector. Single writer; snapshots are cloned out.
///
/// Per-modality scores must arrive in increasing time. With OR fusion the
/// fused result matches [`segment_batch`](crate::segment_batch) when the two
/// modalities are also interleaved in time order.
pub struct Engine {
    cfg: EngineConfig,
    session_id: String,
    bounds: SessionBounds,
    mods: [ModState; 2],
    events: Vec<DetectedEvent>,
    fusion: FusionState,
    sinks: Vec<Box<dyn EngineSink + Send>>,
    alerts: usize,
    finished: bool,
}

fn slot(m: Modality) -> Result<usize> {
    match m {
        Modality::Wrist => Ok(0),
        Modality::Video => Ok(1),
        Modality::Fused => Err(Error::validation("scores must come from WRIST or VIDEO")),
    }
}

const MODS: [Modality; 2] = [Modality::Wrist, Modality::Video];

impl Engine {
    pub fn new(session_id: impl Into<String>, cfg: EngineConfig, bounds: SessionBounds) -> Result<Self> {
        cfg.validate()?;
        Ok(Engine {
            cfg,
            session_id: session_id.into(),
            bounds,
            mods: Default::default(),
            events: Vec::new(),
            fusion: FusionState::default(),
            sinks: Vec::new(),
            alerts: 0,
            finished: false,
        })
    }

    pub fn add_sink(&mut self, sink: Box<dyn EngineSink + Send>) {
        self.sinks.push(sink);
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    /// Every event created so far, per-modality and fused, in creation order.
    pub fn events(&self) -> &[DetectedEvent] {
        &self.events
    }

    /// Events of the modality selected by the fusion mode.
    pub fn primary_events(&self) -> Vec<DetectedEvent> {
        let p = self.cfg.primary();
        self.events.iter().filter(|e| e.modality == p).cloned().collect()
    }

    pub fn alert_count(&self) -> usize {
        self.alerts
    }

    pub fn last_time(&self, m: Modality) -> Option<Timestamp> {
        slot(m).ok().and_then(|i| self.mods[i].last_t)
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Feeds one window score. On error nothing changes.
    pub fn push_window_score(&mut self, modality: Modality, t: Timestamp, score: f64) -> Result<StepOutput> {
        let m = slot(modality)?;
        if self.finished {
            return Err(Error::Finished(t));
        }
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(Error::validation(format!("score {score} outside [0, 1]")));
        }
        if let Some(last) = self.mods[m].last_t {
            if t <= last {
                return Err(Error::NonMonotone { modality, t: t.millis(), last: last.millis() });
            }
        }
        let mut out = StepOutput::default();
        let point = ScorePoint { t, score, modality };
        let positive = score > self.cfg.threshold;
        let win = self.cfg.window_ms(modality);
        let buffer = (self.cfg.buffer_s * 1000.0).round() as i64;
        self.mods[m].last_t = Some(t);

        match self.mods[m].open {
            Some(ei) => {
                let ev = &mut self.events[ei];
                ev.evidence.push(point);
                if positive {
                    let st = &mut self.mods[m];
                    st.neg = 0;
                    st.last_pos = t;
                    ev.peak_score = ev.peak_score.max(score);
                    let (rs, re) = self.bounds.record(buffer, ev.onset, t.add_ms(win));
                    ev.record_start = rs;
                    ev.record_end = re;
                } else {
                    self.mods[m].neg += 1;
                    // windows overlap when the stride is shorter than the
                    // window, so also wait until the last positive one has ended
                    let offset = self.mods[m].last_pos.add_ms(win);
                    if self.mods[m].neg >= self.cfg.k_off && t >= offset {
                        self.close_modality(m, offset, false, t, &mut out);
                    }
                }
            }
            None => {
                if positive {
                    self.mods[m].run.push(point);
                    if self.mods[m].run.len() >= self.cfg.k_on {
                        self.open_modality(m, t, &mut out);
                    }
                } else {
                    self.mods[m].run.clear();
                }
            }
        }
        if self.cfg.fusion == Fusion::Or {
            self.fusion_step(t, false, &mut out);
        }
        self.dispatch(&out);
        Ok(out)
    }

    /// Ends the stream. Open events close at the later of the last score time
    /// and the end of their last positive window, flagged as truncated.
    pub fn finish(&mut self) -> StepOutput {
        let mut out = StepOutput::default();
        if self.finished {
            return out;
        }
        for m in 0..2 {
            if self.mods[m].open.is_some() {
                let st = &self.mods[m];
                let last = st.last_t.unwrap_or(st.last_pos);
                let offset = last.max(st.last_pos.add_ms(self.cfg.window_ms(MODS[m])));
                self.close_modality(m, offset, true, last, &mut out);
            }
            self.mods[m].run.clear();
        }
        let at = self.mods.iter().filter_map(|s| s.last_t).max().unwrap_or(self.bounds.start);
        if self.cfg.fusion == Fusion::Or {
            self.fusion_step(at, true, &mut out);
        }
        self.finished = true;
        self.dispatch(&out);
        out
    }

    fn dispatch(&mut self, out: &StepOutput) {
        for s in &mut self.sinks {
            for t in &out.transitions {
                s.on_transition(t);
            }
            for a in &out.alerts {
                s.on_alert(a);
            }
        }
    }

    fn emit_alert(&mut self, ev: &DetectedEvent, at: Timestamp, out: &mut StepOutput) {
        self.alerts += 1;
        out.alerts.push(Alert {
            event_id: ev.event_id.clone(),
            session_id: ev.session_id.clone(),
            modality: ev.modality,
            onset: ev.onset,
            emitted_at: at,
            peak_score: ev.peak_score,
        });
    }

    fn open_modality(&mut self, m: usize, at: Timestamp, out: &mut StepOutput) {
        let modality = MODS[m];
        let win = self.cfg.window_ms(modality);
        let buffer = (self.cfg.buffer_s * 1000.0).round() as i64;
        let st = &mut self.mods[m];
        st.counter += 1;
        let evidence: Vec<ScorePoint> = std::mem::take(&mut st.run);
        let onset = evidence[0].t;
        let peak = evidence.iter().map(|p| p.score).fold(f64::MIN, f64::max);
        st.last_pos = at;
        st.neg = 0;
        let (record_start, record_end) = self.bounds.record(buffer, onset, at.add_ms(win));
        let ev = DetectedEvent {
            event_id: format!("{}:{}{:04}", self.session_id, modality.code(), st.counter),
            session_id: self.session_id.clone(),
            onset,
            offset: None,
            record_start,
            record_end,
            modality,
            peak_score: peak,
            status: EventStatus::Open,
            truncated: false,
            members: Vec::new(),
            evidence,
        };
        let idx = self.events.len();
        self.events.push(ev.clone());
        st.open = Some(idx);
        if self.cfg.primary() == modality {
            self.emit_alert(&ev, at, out);
        }
        out.transitions.push(Transition { kind: TransitionKind::Opened, at, event: ev });
        if self.cfg.fusion == Fusion::Or {
            self.fusion.pending.push(idx);
        }
    }

    fn close_modality(&mut self, m: usize, offset: Timestamp, truncated: bool, at: Timestamp, out: &mut StepOutput) {
        let buffer = (self.cfg.buffer_s * 1000.0).round() as i64;
        let st = &mut self.mods[m];
        let Some(ei) = st.open.take() else { return };
        st.neg = 0;
        st.run.clear();
        let ev = &mut self.events[ei];
        ev.offset = Some(offset);
        ev.status = EventStatus::Closed;
        ev.truncated = truncated;
        let (rs, re) = self.bounds.record(buffer, ev.onset, offset);
        ev.record_start = rs;
        ev.record_end = re;
        out.transitions.push(Transition { kind: TransitionKind::Closed, at, event: ev.clone() });
    }

    /// Lower bound on the final end of a per-modality event.
    fn end_lb(&self, idx: usize) -> Timestamp {
        let ev = &self.events[idx];
        match ev.offset {
            Some(o) => o,
            None => {
                let m = slot(ev.modality).expect("per-modality event");
                self.mods[m].last_pos.add_ms(self.cfg.window_ms(ev.modality))
            }
        }
    }

    fn span(&self, members: &[usize]) -> (Timestamp, Timestamp) {
        let s = members.iter().map(|&i| self.events[i].onset).min().expect("non-empty group");
        let e = members.iter().map(|&i| self.end_lb(i)).max().expect("non-empty group");
        (s, e)
    }

    fn fusion_step(&mut self, at: Timestamp, finished: bool, out: &mut StepOutput) {
        let gap = (self.cfg.merge_gap_s * 1000.0).round() as i64;
        loop {
            let Some(fi) = self.fusion.active else {
                if self.fusion.pending.is_empty() {
                    break;
                }
                // earliest pending event starts the next fused incident
                let (pos, _) = self
                    .fusion
                    .pending
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &i)| (self.events[i].onset, i))
                    .expect("non-empty");
                let first = self.fusion.pending.remove(pos);
                self.fusion.counter += 1;
                self.fusion.members = vec![first];
                let id = format!("{}:{}{:04}", self.session_id, Modality::Fused.code(), self.fusion.counter);
                let ev = self.build_fused(id, &[first], false);
                let idx = self.events.len();
                self.events.push(ev.clone());
                self.fusion.active = Some(idx);
                self.emit_alert(&ev, at, out);
                out.transitions.push(Transition { kind: TransitionKind::Opened, at, event: ev });
                continue;
            };

            let mut grew = false;
            loop {
                let (s, e) = self.span(&self.fusion.members);
                let hit = self.fusion.pending.iter().position(|&p| {
                    self.events[p].onset.millis() <= e.millis() + gap
                        && s.millis() <= self.end_lb(p).millis() + gap
                });
                match hit {
                    Some(k) => {
                        let p = self.fusion.pending.remove(k);
                        self.fusion.members.push(p);
                        grew = true;
                    }
                    None => break,
                }
            }

            let done = self.fusion_finalizable(finished, gap);
            let members = self.fusion.members.clone();
            let mut ev = self.build_fused(self.events[fi].event_id.clone(), &members, done);
            ev.peak_score = ev.peak_score.max(self.events[fi].peak_score);
            self.events[fi] = ev.clone();
            if done {
                out.transitions.push(Transition { kind: TransitionKind::Closed, at, event: ev });
                self.fusion.active = None;
                self.fusion.members.clear();
                continue;
            }
            if grew {
                out.transitions.push(Transition { kind: TransitionKind::Extended, at, event: ev });
            }
            break;
        }
    }

    /// True once no current or future per-modality event can join the active group.
    fn fusion_finalizable(&self, finished: bool, gap: i64) -> bool {
        let members = &self.fusion.members;
        if members.iter().any(|&i| self.events[i].is_open()) {
            return false;
        }
        let (_, e) = self.span(members);
        let limit = e.millis() + gap;
        if self.fusion.pending.iter().any(|&p| self.events[p].is_open() && self.events[p].onset.millis() <= limit) {
            return false;
        }
        if finished {
            return true;
        }
        self.mods.iter().all(|st| match st.last_t {
            None => true,
            Some(last) => match st.run.first() {
                Some(p) => p.t.millis() > limit,
                None => last.millis() >= limit,
            },
        })
    }

    fn build_fused(&self, event_id: String, members: &[usize], closed: bool) -> DetectedEvent {
        let evs: Vec<&DetectedEvent> = members.iter().map(|&i| &self.events[i]).collect();
        let ends: Vec<Timestamp> = members.iter().map(|&i| self.end_lb(i)).collect();
        fused_event(event_id, &self.session_id, &evs, &ends, closed, &self.cfg, &self.bounds)
    }
}

/// Fused view of a group of per-modality events. Video events set the
/// boundaries whenever the group contains one.
pub(crate) fn fused_event(
    event_id: String,
    session_id: &str,
    members: &[&DetectedEvent],
    ends: &[Timestamp],
    closed: bool,
    cfg: &EngineConfig,
    bounds: &SessionBounds,
) -> DetectedEvent {
    let has_video = members.iter().any(|e| e.modality == Modality::Video);
    let basis = |e: &DetectedEvent| !has_video || e.modality == Modality::Video;
    let onset = members.iter().filter(|e| basis(e)).map(|e| e.onset).min().expect("non-empty group");
    let end = members.iter().zip(ends).filter(|(e, _)| basis(e)).map(|(_, t)| *t).max().expect("non-empty group");
    let peak = members.iter().map(|e| e.peak_score).fold(f64::MIN, f64::max);
    let buffer = (cfg.buffer_s * 1000.0).round() as i64;
    let (record_start, record_end) = bounds.record(buffer, onset, end);
    let mut sorted: Vec<&&DetectedEvent> = members.iter().collect();
    sorted.sort_by(|a, b| (a.onset, &a.event_id).cmp(&(b.onset, &b.event_id)));
    let evidence = if closed {
        let mut ev: Vec<ScorePoint> = members.iter().flat_map(|e| e.evidence.iter().copied()).collect();
        ev.sort_by(|a, b| (a.t, a.modality).cmp(&(b.t, b.modality)));
        ev
    } else {
        Vec::new()
    };
    DetectedEvent {
        event_id,
        session_id: session_id.to_string(),
        onset,
        offset: closed.then_some(end),
        record_start,
        record_end,
        modality: Modality::Fused,
        peak_score: peak,
        status: if closed { EventStatus::Closed } else { EventStatus::Open },
        truncated: members.iter().any(|e| e.truncated),
        members: sorted.iter().map(|e| e.event_id.clone()).collect(),
        evidence,
    }
}
