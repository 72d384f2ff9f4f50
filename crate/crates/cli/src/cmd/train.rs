use agitrack_core::labels::LabelClass;
use agitrack_core::pose::{
    pose_feature_names, prune_by_class_correlation, read_sequence_dataset, FeatureMask, FeatureSequence, PoseFeatureRow,
    POSE_FEATURE_COUNT,
};
use agitrack_core::time::{Rate, Timestamp};
use agitrack_core::wrist::read_feature_matrix;
use agitrack_forest::{auc, evaluate, split_train_test, Dataset, ForestKind, PreAgitationLabel};
use agitrack_seqnet::{measure_latency, CellKind, TrainConfig};
use serde_json::{json, Value};

use super::{fraction, need_file, sibling, unit, write_json};
use crate::args::{ForestArgs, PruneArgs, SeqArgs};
use crate::error::{invalid, Result};
use crate::{schema_path, Ctx};

pub fn forest(a: &ForestArgs, ctx: &Ctx) -> Result<Value> {
    let kind: ForestKind = a.kind.parse()?;
    let pre: PreAgitationLabel = a.preagitation.parse()?;
    let frac = fraction("train-fraction", a.train_fraction)?;
    let threshold = unit("threshold", a.threshold)?;
    let seed = a.seed.unwrap_or(0);
    let input = ctx.path(&a.input);
    need_file(&input)?;
    let m = read_feature_matrix(&input)?;
    let ds = Dataset::from_feature_matrix(&m, pre, None)?;
    let (train, test) = split_train_test(&ds, frac, seed)?;
    let model = agitrack_forest::train(&train, kind, &ctx.cfg.forest, seed)?;
    let eval = evaluate(&model, &test, threshold)?;
    let out = ctx.path(&a.out);
    super::parent_dir(&out)?;
    model.save(&out)?;
    let top: Vec<Value> = eval.top_features(&model.schema, 10).into_iter().map(|(n, v)| json!([n, v])).collect();
    let report = json!({
        "kind": kind,
        "seed": seed,
        "n_train": train.len(),
        "n_test": test.len(),
        "eval": eval,
        "top_features": top,
    });
    let report_path = a.report.as_ref().map(|p| ctx.path(p)).unwrap_or_else(|| sibling(&out, "report.json"));
    write_json(&report_path, &report)?;
    Ok(json!({
        "command": "train forest",
        "model": out,
        "report": report_path,
        "accuracy": eval.accuracy,
        "auc": eval.auc,
    }))
}

pub fn seq(a: &SeqArgs, ctx: &Ctx) -> Result<Value> {
    let kind: CellKind = a.kind.parse()?;
    let mut cfg: TrainConfig = ctx.cfg.seq.clone();
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(h) = a.hidden {
        cfg.hidden_dim = h;
    }
    if let Some(b) = a.batch {
        cfg.batch_size = b;
    }
    if let Some(t) = a.target_accuracy {
        cfg.target_val_accuracy = Some(unit("target-accuracy", t)?);
    }
    cfg.validate()?;
    let input = ctx.path(&a.input);
    need_file(&input)?;
    need_file(&schema_path(&input))?;
    let ds = read_sequence_dataset(&input, &schema_path(&input))?;
    if ds.samples.is_empty() {
        return Err(invalid("sequence dataset is empty"));
    }
    let outcome = agitrack_seqnet::train(&ds, kind, &cfg)?;
    let model = &outcome.model;
    let out = ctx.path(&a.out);
    super::parent_dir(&out)?;
    model.save(&out)?;

    let (val_loss, val_acc) = if outcome.val_idx.is_empty() {
        (None, None)
    } else {
        let (l, acc) = agitrack_seqnet::evaluate(model, &ds, Some(&outcome.val_idx))?;
        (Some(l), Some(acc))
    };
    let mut scores = Vec::with_capacity(outcome.val_idx.len());
    let mut labels = Vec::with_capacity(outcome.val_idx.len());
    for &i in &outcome.val_idx {
        scores.push(model.forward(&ds.samples[i].data)?);
        labels.push(u8::from(ds.samples[i].label));
    }
    let batch: Vec<Vec<f64>> = outcome.val_idx.iter().take(256).map(|&i| ds.samples[i].data.clone()).collect();
    let latency = if batch.is_empty() { None } else { Some(measure_latency(model, &batch, 3)?) };
    if let Some(t) = &a.trace {
        let t = ctx.path(t);
        super::parent_dir(&t)?;
        agitrack_seqnet::write_trace_csv(&t, &outcome.trace)?;
    }
    let report = json!({
        "kind": kind,
        "seed": cfg.seed,
        "config": cfg,
        "epochs_run": outcome.trace.len(),
        "n_train": outcome.train_idx.len(),
        "n_val": outcome.val_idx.len(),
        "val_loss": val_loss,
        "val_accuracy": val_acc,
        "val_auc": auc(&scores, &labels),
        "latency": latency,
    });
    let report_path = a.report.as_ref().map(|p| ctx.path(p)).unwrap_or_else(|| sibling(&out, "report.json"));
    write_json(&report_path, &report)?;
    Ok(json!({
        "command": "train seq",
        "model": out,
        "report": report_path,
        "epochs_run": outcome.trace.len(),
        "val_accuracy": val_acc,
        "per_sequence_ms": latency.as_ref().map(|l| l.per_sequence_ms),
    }))
}

pub fn prune(a: &PruneArgs, ctx: &Ctx) -> Result<Value> {
    let threshold = a.threshold;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(invalid(format!("--threshold must lie in (0, 1], got {threshold}")));
    }
    let input = ctx.path(&a.input);
    need_file(&input)?;
    need_file(&schema_path(&input))?;
    let ds = read_sequence_dataset(&input, &schema_path(&input))?;
    let mask = FeatureMask::from_names(&ds.names)?;
    if mask.names() != ds.names {
        return Err(invalid("sequence file columns are not in canonical pose feature order"));
    }
    let all = pose_feature_names();
    let cols: Vec<usize> = ds.names.iter().map(|n| all.iter().position(|a| a == n).unwrap_or(0)).collect();
    let d = ds.dim();
    let step = Rate::hz(5);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for s in &ds.samples {
        let rows = (0..ds.seq_len)
            .map(|k| {
                let mut values = [0.0; POSE_FEATURE_COUNT];
                for (j, &c) in cols.iter().enumerate() {
                    values[c] = s.data[k * d + j];
                }
                PoseFeatureRow { t: Timestamp(step.offset_ms(k)), values, valid: true }
            })
            .collect();
        let klass = if s.label { LabelClass::Agitation } else { LabelClass::Normal };
        let seq = FeatureSequence::from_rows(Timestamp(0), klass, "p", rows);
        if s.label {
            pos.push(seq);
        } else {
            neg.push(seq);
        }
    }
    let report = prune_by_class_correlation(&pos, &neg, threshold, &mask)?;
    let out = ctx.path(&a.out);
    write_json(&out, &report)?;
    Ok(json!({
        "command": "prune",
        "out": out,
        "threshold": threshold,
        "kept": report.kept.len(),
        "removed": report.removed,
    }))
}
