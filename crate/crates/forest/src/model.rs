use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::tree::{BoostBuilder, ClassifierBuilder, SplitMode, Tree};
use crate::tree_seed;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestKind {
    ExtraTrees,
    RandomForest,
    GradientBoosted,
}

impl ForestKind {
    pub const ALL: [ForestKind; 3] = [ForestKind::ExtraTrees, ForestKind::RandomForest, ForestKind::GradientBoosted];

    pub fn name(self) -> &'static str {
        match self {
            ForestKind::ExtraTrees => "extra_trees",
            ForestKind::RandomForest => "random_forest",
            ForestKind::GradientBoosted => "gradient_boosted",
        }
    }
}

impl std::fmt::Display for ForestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extra_trees" | "et" => Ok(ForestKind::ExtraTrees),
            "random_forest" | "rf" => Ok(ForestKind::RandomForest),
            "gradient_boosted" | "gb" | "xgboost" => Ok(ForestKind::GradientBoosted),
            other => Err(Error::validation(format!("unknown forest kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))` candidates per node.
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k.min(d),
        }
        .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Trees in the ensemble, or boosting rounds.
    pub n_trees: usize,
    /// `None` grows until leaves are pure. Boosting uses `boost_depth`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub boost_depth: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            boost_depth: 3,
            learning_rate: 0.1,
            l2: 1.0,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::validation("n_trees must be at least 1"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::validation("min_samples_split must be at least 2"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::validation("learning_rate must be in (0, 1]"));
        }
        if self.boost_depth == 0 || self.max_depth == Some(0) {
            return Err(Error::validation("depth limits must be at least 1"));
        }
        if self.l2 < 0.0 {
            return Err(Error::validation("l2 must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub kind: ForestKind,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub schema: Vec<String>,
    /// Log-odds starting score for boosting; unused by averaging ensembles.
    pub init_score: f64,
    pub trees: Vec<Tree>,
    /// Normalized total impurity (boosting: loss) reduction per feature.
    pub importance: Vec<f64>,
}

impl ForestModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::validation(format!("unsupported model format {}", m.format_version)));
        }
        let d = m.schema.len();
        if m.trees.iter().flat_map(|t| t.split_features()).any(|f| f >= d) {
            return Err(Error::validation("split feature index outside schema"));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Errors unless `names` equals the training schema.
    pub fn check_schema(&self, names: &[String]) -> Result<()> {
        if names == self.schema.as_slice() {
            Ok(())
        } else {
            Err(Error::Schema(format!("model expects {} features, input has {}", self.schema.len(), names.len())))
        }
    }
}

fn normalize_importance(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|v| v / total).collect()
    } else {
        raw
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn train(ds: &Dataset, kind: ForestKind, hp: &Hyperparams, seed: u64) -> Result<ForestModel> {
    ds.validate()?;
    hp.validate()?;
    let d = ds.dim();
    let n = ds.len();
    let mut importance = vec![0.0; d];
    let mut trees = Vec::with_capacity(hp.n_trees);
    let mut init_score = 0.0;
    match kind {
        ForestKind::ExtraTrees | ForestKind::RandomForest => {
            let mode = if kind == ForestKind::ExtraTrees { SplitMode::Random } else { SplitMode::Exhaustive };
            let k = hp.max_features.resolve(d);
            for t in 0..hp.n_trees {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
                let idx: Vec<usize> = if kind == ForestKind::RandomForest {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let (tree, imp) = ClassifierBuilder::new(ds, mode, k, hp.max_depth, hp.min_samples_split, &mut rng).build(idx);
                importance.iter_mut().zip(imp).for_each(|(a, b)| *a += b);
                trees.push(tree);
            }
        }
        ForestKind::GradientBoosted => {
            let pos = ds.positives() as f64;
            let base = ((pos + 0.5) / (n as f64 + 1.0)).clamp(1e-6, 1.0 - 1e-6);
            init_score = (base / (1.0 - base)).ln();
            let mut score = vec![init_score; n];
            for _ in 0..hp.n_trees {
                let p: Vec<f64> = score.iter().map(|&s| sigmoid(s)).collect();
                let grad: Vec<f64> = (0..n).map(|i| ds.y[i] as f64 - p[i]).collect();
                let hess: Vec<f64> = p.iter().map(|&q| (q * (1.0 - q)).max(1e-12)).collect();
                let (tree, imp) =
                    BoostBuilder::new(ds, &grad, &hess, hp.boost_depth, hp.min_samples_split, hp.l2, hp.learning_rate)
                        .build((0..n).collect());
                for (i, s) in score.iter_mut().enumerate() {
                    *s += tree.predict(ds.row(i));
                }
                importance.iter_mut().zip(imp).for_each(|(a, b)| *a += b);
                trees.push(tree);
            }
        }
    }
    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        seed,
        hyperparams: *hp,
        schema: ds.schema.clone(),
        init_score,
        trees,
        importance: normalize_importance(importance),
    })
}

pub fn predict_proba(model: &ForestModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.schema.len() {
        return Err(Error::LengthMismatch { expected: model.schema.len(), got: row.len() });
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("row has a non-finite value"));
    }
    Ok(match model.kind {
        ForestKind::GradientBoosted => sigmoid(model.init_score + model.trees.iter().map(|t| t.predict(row)).sum::<f64>()),
        _ => {
            let sum: f64 = model.trees.iter().map(|t| t.predict(row)).sum();
            (sum / model.trees.len() as f64).clamp(0.0, 1.0)
        }
    })
}

pub fn evaluate(model: &ForestModel, test: &Dataset, threshold: f64) -> Result<EvalReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::validation(format!("threshold {threshold} outside (0, 1)")));
    }
    model.check_schema(&test.schema)?;
    let scores = (0..test.len()).map(|i| predict_proba(model, test.row(i))).collect::<Result<Vec<f64>>>()?;
    Ok(EvalReport::from_scores(&scores, &test.y, threshold, model.importance.clone()))
}
