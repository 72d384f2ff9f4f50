use std::time::Instant;

use agitrack_core::ingest::Session;
use agitrack_core::pose::{build_sequences, frames_to_rows, FeatureMask, PoseLayout, SequenceConfig};
use agitrack_core::wrist::{prepare_channels, FeatureConfig, FeatureMatrix, MIN_VALID_FRACTION};
use agitrack_forest::{predict_proba, ForestModel};
use agitrack_seqnet::RecurrentModel;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::event::{Alert, DetectedEvent, EngineConfig, Fusion, Modality, ScorePoint, SessionBounds};

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    /// every event in creation order
    pub events: Vec<DetectedEvent>,
    /// events of the fusion mode's primary modality
    pub primary: Vec<DetectedEvent>,
    pub alerts: Vec<Alert>,
    pub scores: Vec<ScorePoint>,
    pub elapsed_s: f64,
}

fn wrist_feature_config(model: &ForestModel) -> Result<FeatureConfig> {
    for cfg in [FeatureConfig { append_biomarkers: false }, FeatureConfig { append_biomarkers: true }] {
        if model.schema == cfg.names() {
            return Ok(cfg);
        }
    }
    Err(Error::Schema(format!(
        "wrist model expects {} features that match neither wrist feature layout",
        model.schema.len()
    )))
}

fn video_mask(model: &RecurrentModel) -> Result<FeatureMask> {
    let mask = if model.feature_names.is_empty() {
        FeatureMask::all()
    } else {
        FeatureMask::from_names(&model.feature_names).map_err(|e| Error::Schema(e.to_string()))?
    };
    if mask.len() != model.input_dim {
        return Err(Error::Schema(format!(
            "video model input_dim {} but {} pose features selected",
            model.input_dim,
            mask.len()
        )));
    }
    Ok(mask)
}

/// One score per wrist minute with enough valid samples.
pub fn wrist_scores(session: &Session, model: &ForestModel) -> Result<Vec<ScorePoint>> {
    let fcfg = wrist_feature_config(model)?;
    let channels = prepare_channels(&session.series)?;
    let m = FeatureMatrix::from_channels(&channels, &session.biomarkers, None, 60.0, fcfg)?;
    let mut out = Vec::with_capacity(m.len());
    for row in &m.rows {
        if row.valid_fraction < MIN_VALID_FRACTION || row.values.iter().any(|v| !v.is_finite()) {
            continue;
        }
        out.push(ScorePoint { t: row.window_start, score: predict_proba(model, &row.values)?, modality: Modality::Wrist });
    }
    Ok(out)
}

/// One score per second over sliding 30-s pose windows of the first person seen.
pub fn video_scores(session: &Session, model: &RecurrentModel) -> Result<Vec<ScorePoint>> {
    let mask = video_mask(model)?;
    let Some(person) = session.keypoints.first().map(|f| f.person_id.clone()) else {
        return Ok(Vec::new());
    };
    let frames: Vec<_> = session.keypoints.iter().filter(|f| f.person_id == person).cloned().collect();
    let rows = frames_to_rows(&frames, &PoseLayout::default());
    let seqs = build_sequences(&rows, &[], &person, &SequenceConfig::default())?;
    let mut ws = agitrack_seqnet::Workspace::default();
    let mut out = Vec::with_capacity(seqs.len());
    for s in &seqs {
        let p = model.forward_with(&s.matrix(&mask), &mut ws)?;
        out.push(ScorePoint { t: s.window_start, score: p, modality: Modality::Video });
    }
    Ok(out)
}

/// Scores the session with the available models and streams the scores
/// through a fresh [`Engine`] in time order. Schemas are checked before
/// any scoring.
pub fn run_replay(
    session: &Session,
    wrist: Option<&ForestModel>,
    video: Option<&RecurrentModel>,
    cfg: &EngineConfig,
) -> Result<ReplayOutput> {
    cfg.validate()?;
    let use_wrist = wrist.filter(|_| cfg.fusion != Fusion::VideoOnly);
    let use_video = video.filter(|_| cfg.fusion != Fusion::WristOnly);
    if let Some(m) = use_wrist {
        wrist_feature_config(m)?;
    }
    if let Some(m) = use_video {
        video_mask(m)?;
    }
    let start = Instant::now();
    let mut scores = Vec::new();
    if let Some(m) = use_wrist {
        scores.extend(wrist_scores(session, m)?);
    }
    if let Some(m) = use_video {
        scores.extend(video_scores(session, m)?);
    }
    scores.sort_by(|a, b| (a.t, a.modality).cmp(&(b.t, b.modality)));

    let t0 = session.meta.t0;
    let bounds = SessionBounds::new(t0, Some(t0.add_secs(session.meta.duration_s)));
    let mut engine = Engine::new(session.meta.session_id.clone(), cfg.clone(), bounds)?;
    let mut alerts = Vec::new();
    for p in &scores {
        alerts.extend(engine.push_window_score(p.modality, p.t, p.score)?.alerts);
    }
    alerts.extend(engine.finish().alerts);
    Ok(ReplayOutput {
        events: engine.events().to_vec(),
        primary: engine.primary_events(),
        alerts,
        scores,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
