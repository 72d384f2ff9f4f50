#![allow(dead_code)]

use std::sync::OnceLock;

use agitrack_core::pose::FeatureMask;
use agitrack_core::synth::{clip_dataset, generate, ClipSetSpec, ScenarioSpec};
use agitrack_core::time::Timestamp;
use agitrack_core::wrist::{prepare_channels, FeatureConfig, FeatureMatrix};
use agitrack_forest::{train, Dataset, ForestKind, ForestModel, Hyperparams, PreAgitationLabel};
use agitrack_realtime::{Modality, ScorePoint};
use agitrack_seqnet::{CellKind, RecurrentModel, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Extra Trees on the default session plus a small LSTM on synthetic clips.
/// Built once per test binary.
pub fn models() -> &'static (ForestModel, RecurrentModel) {
    static M: OnceLock<(ForestModel, RecurrentModel)> = OnceLock::new();
    M.get_or_init(|| {
        let s = generate(&ScenarioSpec::default()).unwrap();
        let ch = prepare_channels(&s.session.series).unwrap();
        let m = FeatureMatrix::from_channels(&ch, &s.session.biomarkers, Some(&s.truth), 60.0, FeatureConfig::default())
            .unwrap();
        let ds = Dataset::from_feature_matrix(&m, PreAgitationLabel::Negative, None).unwrap();
        let et = train(&ds, ForestKind::ExtraTrees, &Hyperparams::default(), 42).unwrap();
        let clips = clip_dataset(&ClipSetSpec { per_class: 300, ..Default::default() }, &FeatureMask::all()).unwrap();
        let cfg = TrainConfig { epochs: 5, hidden_dim: 8, batch_size: 32, seed: 1, ..Default::default() };
        let lstm = agitrack_seqnet::train(&clips, CellKind::Lstm, &cfg).unwrap().model;
        (et, lstm)
    })
}

/// Wrist scores each minute and video scores each second over `minutes`,
/// driven by a two-state regime chain so that runs of high scores occur.
pub fn random_trace(seed: u64, minutes: i64) -> Vec<ScorePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_switch = rng.random_range(0.02..0.2);
    let mut hot = false;
    let mut regime = Vec::new();
    for _ in 0..minutes * 60 {
        if rng.random_bool(p_switch / 20.0) {
            hot = !hot;
        }
        regime.push(hot);
    }
    let noise = rng.random_range(0.05..0.5);
    let draw = |hot: bool, rng: &mut ChaCha8Rng| {
        let base: f64 = if hot { 0.8 } else { 0.2 };
        (base + rng.random_range(-noise..noise)).clamp(0.0, 1.0)
    };
    let with_video = rng.random_bool(0.8);
    let with_wrist = !with_video || rng.random_bool(0.8);
    let mut out = Vec::new();
    for (s, &hot) in regime.iter().enumerate() {
        let t = Timestamp::from_millis(s as i64 * 1000);
        if with_wrist && s % 60 == 0 {
            let v = draw(hot, &mut rng);
            out.push(ScorePoint { t, score: v, modality: Modality::Wrist });
        }
        // occasional gaps in the video stream
        if with_video && !rng.random_bool(0.03) {
            let v = draw(hot, &mut rng);
            out.push(ScorePoint { t, score: v, modality: Modality::Video });
        }
    }
    out
}
