//! Core of the agitation-detection toolkit.
//!
//! Holds the shared time axis and label algebra, the session file layout
//! and its parsers, the per-minute wristband feature pipeline, the skeletal
//! pose feature pipeline, and a deterministic synthetic session generator
//! used as ground truth for everything downstream.

pub mod error;
pub mod ingest;
pub mod labels;
pub mod pose;
pub mod series;
pub mod synth;
pub mod time;
pub mod wrist;

pub use error::{Error, Result};
pub use labels::{label_windows, merge_intervals, LabelClass, LabelInterval, LabelSource, WindowLabel};
pub use series::{Channel, SampleSeries};
pub use time::{Rate, Timestamp};
