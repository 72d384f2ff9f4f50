use std::path::Path;

use agitrack_core::pose::SequenceDataset;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cell::{accumulate_grad, bce_logit, logit_normalized, sigmoid, Workspace};
use crate::error::{Error, Result};
use crate::model::{CellKind, Normalization, RecurrentModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// global gradient norm cap; 0 disables clipping
    pub clip_norm: f64,
    pub hidden_dim: usize,
    /// held-out share used by [`train`]
    pub val_fraction: f64,
    pub seed: u64,
    /// stop once held-out accuracy reaches this value; off by default
    pub target_val_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            hidden_dim: 64,
            val_fraction: 0.3,
            seed: 0,
            target_val_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::validation("hidden_dim must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::validation("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::validation("adam betas must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::validation("val_fraction must lie in [0, 1)"));
        }
        if self.clip_norm < 0.0 {
            return Err(Error::validation("clip_norm must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when there is no held-out set
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// One entry per completed epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn train_loss(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn val_loss(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_loss).collect()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:.9e},{:.9e}\n", e.epoch, e.train_loss, e.val_loss));
        }
        s
    }
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &TrainTrace) -> Result<()> {
    std::fs::write(path, trace.to_csv())?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RecurrentModel,
    pub trace: TrainTrace,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
}

fn check_dataset(ds: &SequenceDataset) -> Result<()> {
    let d = ds.dim();
    if d == 0 {
        return Err(Error::validation("dataset has no features"));
    }
    for s in &ds.samples {
        if s.data.len() != ds.seq_len * d {
            return Err(Error::validation(format!(
                "sequence {} has {} values, expected {} steps × {} features",
                s.id,
                s.data.len(),
                ds.seq_len,
                d
            )));
        }
        if s.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("sequence {} contains non-finite values", s.id)));
        }
    }
    Ok(())
}

/// Random train/held-out split by `cfg.seed`, then [`train_split`].
pub fn train(ds: &SequenceDataset, kind: CellKind, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut idx: Vec<usize> = (0..ds.samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    idx.shuffle(&mut rng);
    let n_val = (ds.samples.len() as f64 * cfg.val_fraction).round() as usize;
    let val_idx = idx[..n_val].to_vec();
    let train_idx = idx[n_val..].to_vec();
    train_split(ds, train_idx, val_idx, kind, cfg)
}

/// Trains on `train_idx` and reports held-out loss on `val_idx` every epoch.
pub fn train_split(
    ds: &SequenceDataset,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    kind: CellKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_dataset(ds)?;
    if train_idx.iter().chain(&val_idx).any(|&i| i >= ds.samples.len()) {
        return Err(Error::validation("split index out of range"));
    }
    let pos = train_idx.iter().filter(|&&i| ds.samples[i].label).count();
    if pos == 0 || pos == train_idx.len() {
        return Err(Error::validation("training split needs both labels"));
    }
    let d = ds.dim();
    let mut model = RecurrentModel::init(kind, d, cfg.hidden_dim, cfg.seed)?;
    model.feature_names = ds.names.clone();
    model.norm = Normalization::fit(d, train_idx.iter().map(|&i| ds.samples[i].data.as_slice()));

    let normed = |ids: &[usize]| -> Vec<(Vec<f64>, f64)> {
        ids.iter()
            .map(|&i| {
                let mut x = Vec::new();
                model.norm.apply(&ds.samples[i].data, &mut x);
                (x, if ds.samples[i].label { 1.0 } else { 0.0 })
            })
            .collect()
    };
    let train_set = normed(&train_idx);
    let val_set = normed(&val_idx);

    let n_params = model.params.len();
    let mut adam = Adam::new(n_params, cfg);
    let mut grad = vec![0.0; n_params];
    let mut ws = Workspace::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let mut trace = TrainTrace::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (x, y) = &train_set[i];
                let (loss, _) = accumulate_grad(&model, x, *y, &mut ws, &mut grad);
                loss_sum += loss;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            clip(&mut grad, cfg.clip_norm);
            adam.step(&mut model.params, &grad);
        }
        let (val_loss, val_accuracy) = if val_set.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            eval_normalized(&model, &val_set, &mut ws)
        };
        trace.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss,
            val_accuracy,
        });
        log::debug!(
            "{kind} epoch {epoch}: train {:.4} val {:.4} acc {:.4}",
            loss_sum / train_set.len() as f64,
            val_loss,
            val_accuracy
        );
        if let Some(target) = cfg.target_val_accuracy {
            if val_accuracy >= target {
                break;
            }
        }
    }
    if model.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::validation("training diverged to non-finite parameters"));
    }
    Ok(TrainOutcome { model, trace, train_idx, val_idx })
}

fn eval_normalized(model: &RecurrentModel, set: &[(Vec<f64>, f64)], ws: &mut Workspace) -> (f64, f64) {
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (x, y) in set {
        let z = logit_normalized(model, x, ws);
        loss += bce_logit(z, *y);
        if (sigmoid(z) > 0.5) == (*y == 1.0) {
            hits += 1;
        }
    }
    (loss / set.len() as f64, hits as f64 / set.len() as f64)
}

/// Mean cross-entropy and accuracy (positive iff p > 0.5) over `idx`,
/// or over the whole dataset when `idx` is `None`.
pub fn evaluate(model: &RecurrentModel, ds: &SequenceDataset, idx: Option<&[usize]>) -> Result<(f64, f64)> {
    if ds.dim() != model.input_dim {
        return Err(Error::DimMismatch { expected: model.input_dim, got: ds.dim() });
    }
    let all: Vec<usize>;
    let idx = match idx {
        Some(i) => i,
        None => {
            all = (0..ds.samples.len()).collect();
            &all
        }
    };
    if idx.is_empty() {
        return Err(Error::validation("nothing to evaluate"));
    }
    let mut set = Vec::with_capacity(idx.len());
    for &i in idx {
        let s = ds.samples.get(i).ok_or_else(|| Error::validation("index out of range"))?;
        if s.data.len() % model.input_dim != 0 || s.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("sequence {} is malformed", s.id)));
        }
        let mut x = Vec::new();
        model.norm.apply(&s.data, &mut x);
        set.push((x, if s.label { 1.0 } else { 0.0 }));
    }
    Ok(eval_normalized(model, &set, &mut Workspace::default()))
}

pub fn accuracy(model: &RecurrentModel, ds: &SequenceDataset, idx: Option<&[usize]>) -> Result<f64> {
    evaluate(model, ds, idx).map(|(_, a)| a)
}

fn clip(grad: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize, cfg: &TrainConfig) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr: cfg.learning_rate,
            b1: cfg.beta1,
            b2: cfg.beta2,
            eps: cfg.epsilon,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.b1.powi(self.t);
        let c2 = 1.0 - self.b2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g;
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
