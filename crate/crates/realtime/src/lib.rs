//! Online detection: per-modality window scores go in, debounced events,
//! fused incidents and exactly-once alerts come out.

mod batch;
mod engine;
mod error;
mod event;
mod metrics;
mod preagitation;
mod replay;
mod sink;

pub use batch::segment_batch;
pub use engine::{Engine, StepOutput};
pub use error::{Error, Result};
pub use event::{
    canonical_order, Alert, DetectedEvent, EngineConfig, EventStatus, Fusion, Modality, ScorePoint, SessionBounds,
    Transition, TransitionKind,
};
pub use metrics::{detection_latency, DetectionSummary, TRUTH_TOLERANCE_S};
pub use preagitation::{preagitation_flags, preagitation_lead, MinuteFlag, PreAgitationDetector};
pub use replay::{run_replay, video_scores, wrist_scores, ReplayOutput};
pub use sink::{CallbackSink, EngineSink, JsonlEventLog, MemorySink};
