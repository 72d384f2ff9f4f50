//! Tree-ensemble classifiers for per-window wristband features.

mod dataset;
mod error;
mod metrics;
mod model;
mod tree;

pub use dataset::{split_pooled, split_train_test, oversample_minority, Dataset, PreAgitationLabel, SplitProtocol};
pub use error::{Error, Result};
pub use metrics::{auc, confusion, EvalReport};
pub use model::{evaluate, predict_proba, train, ForestKind, ForestModel, Hyperparams, MaxFeatures, MODEL_FORMAT_VERSION};
pub use tree::{Node, Tree};

/// Seed for tree `index` derived from the master seed, so trees can be
/// built in any order and agree.
pub fn tree_seed(master: u64, index: usize) -> u64 {
    let mut z = master ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
