//! Skeleton keypoints to per-frame pose features and fixed-length
//! sequences, plus per-class correlation pruning.

mod features;
mod normalize;
mod prune;
mod sequences;

pub use features::{
    extract_pose_features, extract_stream, pose_feature_names, PoseFeatureRow, ANG_OFFSET, EU1_OFFSET, EU_OFFSET,
    POR_OFFSET, POSE_FEATURE_COUNT,
};
pub use normalize::{normalize_skeleton, normalize_stream, NormalizedFrame, PointState, PoseLayout, MIN_CONFIDENCE};
pub use prune::{pearson_matrix, prune_by_class_correlation, PruneReport};
pub use sequences::{
    build_sequences, read_sequence_dataset, resample_rows, write_sequence_dataset, FeatureMask, FeatureSequence,
    SequenceConfig, SequenceDataset, SequenceSample, MAX_HOLD_MS, MAX_INVALID_FRACTION,
};

use crate::ingest::KeypointFrame;

/// Normalization and feature extraction for one person's frames.
pub fn frames_to_rows(frames: &[KeypointFrame], layout: &PoseLayout) -> Vec<PoseFeatureRow> {
    extract_stream(&normalize_stream(frames, layout), layout)
}
