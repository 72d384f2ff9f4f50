use rand::Rng;

use super::skeleton::{pose_clip, ClipSpec};
use super::{rng_for, MotionStyle};
use crate::error::{Error, Result};
use crate::labels::LabelClass;
use crate::pose::{frames_to_rows, FeatureMask, FeatureSequence, PoseLayout, SequenceDataset};
use crate::time::Timestamp;

/// Balanced set of standalone pose clips: agitated (pacing or flailing,
/// alternating) against idle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSetSpec {
    pub per_class: usize,
    pub duration_s: f64,
    pub hz: u32,
    pub jitter: f64,
    pub dropout: f64,
    /// agitated clips draw intensity uniformly from this range
    pub min_intensity: f64,
    pub seed: u64,
}

impl Default for ClipSetSpec {
    fn default() -> Self {
        ClipSetSpec { per_class: 2000, duration_s: 30.0, hz: 5, jitter: 0.01, dropout: 0.05, min_intensity: 0.5, seed: 42 }
    }
}

const CLIP_STREAM: u64 = 8;

/// Sequences ordered negative, positive, negative, ... so any prefix is balanced.
pub fn clip_sequences(spec: &ClipSetSpec) -> Result<Vec<FeatureSequence>> {
    if spec.per_class == 0 || !(spec.duration_s > 0.0) || spec.hz == 0 {
        return Err(Error::validation("clip set needs per_class, duration_s and hz positive"));
    }
    if !(0.0..=1.0).contains(&spec.min_intensity) {
        return Err(Error::validation("min_intensity must lie in [0, 1]"));
    }
    let layout = PoseLayout::default();
    let mut rng = rng_for(spec.seed, CLIP_STREAM);
    let mut out = Vec::with_capacity(2 * spec.per_class);
    for i in 0..spec.per_class {
        for positive in [false, true] {
            let (style, intensity, klass) = if positive {
                let style = if i % 2 == 0 { MotionStyle::Pacing } else { MotionStyle::Flailing };
                (style, rng.random_range(spec.min_intensity..=1.0), LabelClass::Agitation)
            } else {
                (MotionStyle::Idle, 0.0, LabelClass::Normal)
            };
            let clip = ClipSpec {
                style,
                intensity,
                duration_s: spec.duration_s,
                hz: spec.hz,
                jitter: spec.jitter,
                dropout: spec.dropout,
                seed: rng.random(),
            };
            let rows = frames_to_rows(&pose_clip(&clip, "clip"), &layout);
            out.push(FeatureSequence::from_rows(Timestamp::ZERO, klass, format!("clip-{}", out.len()), rows));
        }
    }
    Ok(out)
}

pub fn clip_dataset(spec: &ClipSetSpec, mask: &FeatureMask) -> Result<SequenceDataset> {
    SequenceDataset::from_sequences(&clip_sequences(spec)?, mask)
}
