//! Training data snapshots and the default retraining pipeline.

use agitrack_core::ingest::load_session;
use agitrack_core::labels::{class_overlap_ms, classify_window, LabelClass, LabelInterval};
use agitrack_core::pose::{build_sequences, frames_to_rows, FeatureMask, PoseLayout, SequenceConfig, SequenceDataset};
use agitrack_core::time::secs_to_ms;
use agitrack_core::wrist::{prepare_channels, FeatureConfig, FeatureMatrix, MIN_VALID_FRACTION};
use agitrack_forest::{Dataset, ForestKind, Hyperparams, PreAgitationLabel};
use agitrack_seqnet::{CellKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::State;
use crate::types::{ModelKind, SessionInfo};

/// Labels of one session frozen at job creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub info: SessionInfo,
    pub base_labels: Vec<LabelInterval>,
    pub review_labels: Vec<LabelInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSnapshot {
    pub snapshot_id: u64,
    pub sessions: Vec<SessionSnapshot>,
}

impl TrainingSnapshot {
    pub fn of(state: &State) -> Self {
        TrainingSnapshot {
            snapshot_id: state.last_seq,
            sessions: state
                .sessions
                .values()
                .map(|s| SessionSnapshot {
                    info: s.info.clone(),
                    base_labels: s.base_labels.clone(),
                    review_labels: state.review_labels(&s.info.session_id),
                })
                .collect(),
        }
    }
}

/// Serialized candidate model with its held-out evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub bytes: String,
    pub auc: Option<f64>,
    pub accuracy: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// labeled rows or sequences in the snapshot dataset
    pub rows: usize,
}

pub trait Trainer: Send + Sync {
    fn train(&self, kind: ModelKind, snapshot: &TrainingSnapshot) -> Result<TrainedModel>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub forest_kind: ForestKind,
    pub hyperparams: Hyperparams,
    pub preagitation: PreAgitationLabel,
    /// rejected intervals become normal rows in unlabeled sessions
    pub rejections_as_negatives: bool,
    pub cell: CellKind,
    pub seq_train: TrainConfig,
    pub seq_stride_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            train_fraction: 0.7,
            forest_kind: ForestKind::ExtraTrees,
            hyperparams: Hyperparams::default(),
            preagitation: PreAgitationLabel::Exclude,
            rejections_as_negatives: false,
            cell: CellKind::Lstm,
            seq_train: TrainConfig { epochs: 10, hidden_dim: 16, batch_size: 32, ..Default::default() },
            seq_stride_s: 5.0,
        }
    }
}

/// Trains forests on wrist windows and recurrent models on pose sequences
/// of the snapshot's sessions.
#[derive(Debug, Clone, Default)]
pub struct PipelineTrainer {
    pub cfg: PipelineConfig,
}

impl PipelineTrainer {
    pub fn new(cfg: PipelineConfig) -> Self {
        PipelineTrainer { cfg }
    }

    /// Window class for training, or `None` when the window stays out.
    /// Labeled sessions use base plus review labels everywhere; unlabeled
    /// sessions only contribute windows covered by reviews.
    fn window_class(&self, s: &SessionSnapshot, from: agitrack_core::Timestamp, len_ms: i64) -> Option<LabelClass> {
        let to = from.add_ms(len_ms);
        let reviews: Vec<LabelInterval> = s
            .review_labels
            .iter()
            .copied()
            .filter(|i| i.klass == LabelClass::Agitation || self.cfg.rejections_as_negatives)
            .collect();
        let klass = if s.info.labeled {
            let mut all = s.base_labels.clone();
            all.extend(reviews.iter().copied());
            classify_window(&all, from, to)
        } else {
            let covered = [LabelClass::Agitation, LabelClass::Normal]
                .into_iter()
                .find(|k| 2 * class_overlap_ms(&reviews, *k, from, to) >= len_ms)?;
            covered
        };
        match (klass, self.cfg.preagitation) {
            (LabelClass::PreAgitation, PreAgitationLabel::Exclude) => None,
            (LabelClass::PreAgitation, PreAgitationLabel::Negative) => Some(LabelClass::Normal),
            (LabelClass::PreAgitation, PreAgitationLabel::Positive) => Some(LabelClass::Agitation),
            (k, _) => Some(k),
        }
    }

    pub fn forest_dataset(&self, snap: &TrainingSnapshot) -> Result<Dataset> {
        let cfg = FeatureConfig::default();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for s in &snap.sessions {
            let Some(dir) = &s.info.dir else { continue };
            let session = load_session(dir)?;
            let ch = prepare_channels(&session.series)?;
            let m = FeatureMatrix::from_channels(&ch, &session.biomarkers, None, 60.0, cfg)?;
            for r in &m.rows {
                if r.valid_fraction < MIN_VALID_FRACTION {
                    continue;
                }
                if let Some(k) = self.window_class(s, r.window_start, 60_000) {
                    rows.push(r.values.clone());
                    y.push(u8::from(k == LabelClass::Agitation));
                }
            }
        }
        Ok(Dataset::new(cfg.names(), rows, y)?)
    }

    pub fn sequence_dataset(&self, snap: &TrainingSnapshot) -> Result<SequenceDataset> {
        let seq_cfg = SequenceConfig { stride_s: self.cfg.seq_stride_s, ..Default::default() };
        let len_ms = secs_to_ms(seq_cfg.window_s);
        let mut seqs = Vec::new();
        for s in &snap.sessions {
            let Some(dir) = &s.info.dir else { continue };
            let session = load_session(dir)?;
            let Some(person) = session.person_ids().into_iter().next() else { continue };
            let rows = frames_to_rows(&session.frames_for(&person), &PoseLayout::default());
            for mut q in build_sequences(&rows, &[], &person, &seq_cfg)? {
                if let Some(k) = self.window_class(s, q.window_start, len_ms) {
                    q.klass = k;
                    seqs.push(q);
                }
            }
        }
        Ok(SequenceDataset::from_sequences(&seqs, &FeatureMask::all())?)
    }
}

impl Trainer for PipelineTrainer {
    fn train(&self, kind: ModelKind, snap: &TrainingSnapshot) -> Result<TrainedModel> {
        match kind {
            ModelKind::Forest => {
                let ds = self.forest_dataset(snap)?;
                let (tr, te) = agitrack_forest::split_train_test(&ds, self.cfg.train_fraction, self.cfg.seed)?;
                let model = agitrack_forest::train(&tr, self.cfg.forest_kind, &self.cfg.hyperparams, self.cfg.seed)?;
                let rep = agitrack_forest::evaluate(&model, &te, 0.5)?;
                Ok(TrainedModel {
                    bytes: model.to_json(),
                    auc: rep.auc,
                    accuracy: Some(rep.accuracy),
                    n_train: tr.len(),
                    n_test: te.len(),
                    rows: ds.len(),
                })
            }
            ModelKind::Recurrent => {
                let ds = self.sequence_dataset(snap)?;
                if ds.samples.is_empty() {
                    return Err(Error::validation("snapshot has no labeled sequences"));
                }
                let cfg = TrainConfig {
                    val_fraction: 1.0 - self.cfg.train_fraction,
                    seed: self.cfg.seed,
                    ..self.cfg.seq_train.clone()
                };
                let out = agitrack_seqnet::train(&ds, self.cfg.cell, &cfg)?;
                let mut ws = agitrack_seqnet::Workspace::default();
                let mut scores = Vec::with_capacity(out.val_idx.len());
                let mut labels = Vec::with_capacity(out.val_idx.len());
                for &i in &out.val_idx {
                    let s = &ds.samples[i];
                    scores.push(out.model.forward_with(&s.data, &mut ws)?);
                    labels.push(u8::from(s.label));
                }
                let acc = agitrack_seqnet::accuracy(&out.model, &ds, Some(&out.val_idx))?;
                Ok(TrainedModel {
                    bytes: out.model.to_json()?,
                    auc: agitrack_forest::auc(&scores, &labels),
                    accuracy: Some(acc),
                    n_train: out.train_idx.len(),
                    n_test: out.val_idx.len(),
                    rows: ds.samples.len(),
                })
            }
        }
    }
}
