//! Wristband signal processing: EDA tonic/phasic split, per-minute window
//! features and minute-level biomarkers derived from raw channels.

mod biomarkers;
mod eda;
mod features;
mod matrix;
pub mod stats;

pub use biomarkers::{derive_biomarkers, derive_biomarkers_with, derive_hr_series, detect_peaks, highpass, BiomarkerConfig};
pub use eda::{eda_decompose, moving_average, EDA_TONIC_SPAN_S};
pub use features::{
    catalog_names, channel_features, extract_window_features, prepare_channels, schema_hash, window_starts, ChannelSet, FeatureConfig,
    FeatureVector, BIOMARKER_FEATURES, CATALOG_CHANNELS, CATALOG_VERSION, CHANNEL_FEATURES, MIN_VALID_FRACTION,
    WINDOW_LEN_S,
};
pub use matrix::{format_feature_matrix, read_feature_matrix, write_feature_matrix, FeatureMatrix, FeatureRow};
