use agitrack_core::time::{secs_to_ms, Timestamp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modality {
    Wrist,
    Video,
    Fused,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Wrist => "WRIST",
            Modality::Video => "VIDEO",
            Modality::Fused => "FUSED",
        }
    }

    pub(crate) fn code(self) -> char {
        match self {
            Modality::Wrist => 'W',
            Modality::Video => 'V',
            Modality::Fused => 'F',
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WRIST" => Ok(Modality::Wrist),
            "VIDEO" => Ok(Modality::Video),
            "FUSED" => Ok(Modality::Fused),
            other => Err(Error::validation(format!("unknown modality {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventStatus {
    Open,
    Closed,
    Confirmed,
    Rejected,
}

impl std::str::FromStr for EventStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OPEN" => Ok(EventStatus::Open),
            "CLOSED" => Ok(EventStatus::Closed),
            "CONFIRMED" => Ok(EventStatus::Confirmed),
            "REJECTED" => Ok(EventStatus::Rejected),
            other => Err(Error::validation(format!("unknown event status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Fusion {
    #[default]
    Or,
    WristOnly,
    VideoOnly,
}

impl std::str::FromStr for Fusion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "OR" => Ok(Fusion::Or),
            "WRIST_ONLY" | "WRIST" => Ok(Fusion::WristOnly),
            "VIDEO_ONLY" | "VIDEO" => Ok(Fusion::VideoOnly),
            other => Err(Error::validation(format!("unknown fusion mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub threshold: f64,
    pub k_on: usize,
    pub k_off: usize,
    pub buffer_s: f64,
    pub merge_gap_s: f64,
    pub fusion: Fusion,
    /// length of one scored wrist window
    pub wrist_window_s: f64,
    /// length of one scored video window
    pub video_window_s: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            threshold: 0.5,
            k_on: 3,
            k_off: 5,
            buffer_s: 300.0,
            merge_gap_s: 60.0,
            fusion: Fusion::Or,
            wrist_window_s: 60.0,
            video_window_s: 30.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_on == 0 || self.k_off == 0 {
            return Err(Error::validation("k_on and k_off must be at least 1"));
        }
        if !(self.buffer_s >= 0.0) || !(self.merge_gap_s >= 0.0) {
            return Err(Error::validation("buffer_s and merge_gap_s must be non-negative"));
        }
        if !(self.wrist_window_s > 0.0) || !(self.video_window_s > 0.0) {
            return Err(Error::validation("window lengths must be positive"));
        }
        if !self.threshold.is_finite() {
            return Err(Error::validation("threshold must be finite"));
        }
        Ok(())
    }

    pub fn window_ms(&self, m: Modality) -> i64 {
        match m {
            Modality::Wrist => secs_to_ms(self.wrist_window_s),
            _ => secs_to_ms(self.video_window_s),
        }
    }

    /// Modality whose events are reported and alerted on.
    pub fn primary(&self) -> Modality {
        match self.fusion {
            Fusion::Or => Modality::Fused,
            Fusion::WristOnly => Modality::Wrist,
            Fusion::VideoOnly => Modality::Video,
        }
    }
}

/// Session time range used to clamp record bounds. `end` is unknown while live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionBounds {
    pub start: Timestamp,
    pub end: Option<Timestamp>,
}

impl SessionBounds {
    pub fn new(start: Timestamp, end: Option<Timestamp>) -> Self {
        SessionBounds { start, end }
    }

    pub(crate) fn record(&self, buffer_ms: i64, onset: Timestamp, end: Timestamp) -> (Timestamp, Timestamp) {
        let rs = onset.add_ms(-buffer_ms).max(self.start).min(onset);
        let mut re = end.add_ms(buffer_ms);
        if let Some(e) = self.end {
            re = re.min(e);
        }
        (rs, re.max(end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePoint {
    pub t: Timestamp,
    pub score: f64,
    pub modality: Modality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedEvent {
    pub event_id: String,
    pub session_id: String,
    pub onset: Timestamp,
    pub offset: Option<Timestamp>,
    pub record_start: Timestamp,
    pub record_end: Timestamp,
    pub modality: Modality,
    pub peak_score: f64,
    pub status: EventStatus,
    /// closed by end of stream rather than by the debounce rule
    #[serde(default)]
    pub truncated: bool,
    /// constituent per-modality events of a fused event
    #[serde(default)]
    pub members: Vec<String>,
    pub evidence: Vec<ScorePoint>,
}

impl DetectedEvent {
    pub fn is_open(&self) -> bool {
        self.status == EventStatus::Open
    }

    /// Offset when closed, otherwise the end of the latest scored window.
    pub fn end_or(&self, fallback: Timestamp) -> Timestamp {
        self.offset.unwrap_or(fallback)
    }

    pub fn duration_s(&self) -> Option<f64> {
        self.offset.map(|o| o.secs_since(self.onset))
    }
}

/// Events sorted by modality, then onset, then id.
pub fn canonical_order(events: &[DetectedEvent]) -> Vec<DetectedEvent> {
    let mut v = events.to_vec();
    v.sort_by(|a, b| (a.modality, a.onset, &a.event_id).cmp(&(b.modality, b.onset, &b.event_id)));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    Opened,
    Extended,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub kind: TransitionKind,
    /// score time that caused the transition
    pub at: Timestamp,
    pub event: DetectedEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub event_id: String,
    pub session_id: String,
    pub modality: Modality,
    pub onset: Timestamp,
    pub emitted_at: Timestamp,
    pub peak_score: f64,
}
