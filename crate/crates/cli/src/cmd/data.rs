use std::collections::BTreeMap;
use std::path::Path;

use agitrack_core::ingest::load_session;
use agitrack_core::labels::LabelClass;
use agitrack_core::pose::{
    build_sequences, frames_to_rows, write_sequence_dataset, FeatureMask, PoseLayout, PruneReport, SequenceConfig,
    SequenceDataset,
};
use agitrack_core::synth::{clip_sequences, generate, ClipSetSpec, ScenarioSpec};
use agitrack_core::wrist::{prepare_channels, schema_hash, write_feature_matrix, FeatureConfig, FeatureMatrix, WINDOW_LEN_S};
use serde_json::{json, Value};

use super::{need_dir, need_file, parent_dir, positive};
use crate::args::{IngestArgs, PoseArgs, SynthArgs, WristArgs};
use crate::error::{invalid, Result};
use crate::{schema_path, Ctx};

pub fn synth(a: &SynthArgs, ctx: &Ctx) -> Result<Value> {
    let mut spec = if a.spec == "default" {
        ctx.cfg.synth.clone().unwrap_or_default()
    } else {
        let p = ctx.path(Path::new(&a.spec));
        need_file(&p)?;
        ScenarioSpec::load(&p)?
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(p) = &a.participant {
        spec.participant_id = p.clone();
    }
    if let Some(d) = a.duration {
        spec.duration_s = positive("duration", d)?;
        spec.episodes.retain(|e| e.agitation_start_s + e.agitation_len_s <= d);
    }
    spec.validate()?;
    let out = ctx.path(&a.out);
    let synth = generate(&spec)?;
    std::fs::create_dir_all(&out)?;
    synth.write(&out)?;
    std::fs::write(out.join("scenario.toml"), spec.to_toml())?;
    Ok(json!({
        "command": "synth",
        "out": out,
        "session_id": spec.session_id,
        "seed": spec.seed,
        "duration_s": spec.duration_s,
        "truth_intervals": synth.truth.len(),
        "keypoint_frames": synth.session.keypoints.len(),
    }))
}

fn class_counts(classes: impl Iterator<Item = LabelClass>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for k in classes {
        *m.entry(format!("{k:?}")).or_insert(0) += 1;
    }
    m
}

pub fn ingest(a: &IngestArgs, ctx: &Ctx) -> Result<Value> {
    let dir = ctx.path(&a.input);
    need_dir(&dir)?;
    let s = load_session(&dir)?;
    let channels: Vec<Value> = s
        .series
        .values()
        .map(|c| {
            json!({
                "channel": c.channel.name(),
                "rate_hz": c.rate.as_f64(),
                "samples": c.len(),
                "valid_fraction": if c.is_empty() { 0.0 } else { c.valid_count() as f64 / c.len() as f64 },
            })
        })
        .collect();
    let report = json!({
        "command": "ingest",
        "session": s.meta,
        "channels": channels,
        "biomarker_minutes": s.biomarkers.len(),
        "keypoint_frames": s.keypoints.len(),
        "persons": s.person_ids(),
        "labels": class_counts(s.labels.iter().map(|l| l.klass)),
    });
    if let Some(out) = &a.out {
        super::write_json(&ctx.path(out), &report)?;
    }
    Ok(report)
}

pub fn features_wrist(a: &WristArgs, ctx: &Ctx) -> Result<Value> {
    if a.window != WINDOW_LEN_S {
        return Err(invalid(format!("--window must be {WINDOW_LEN_S} s for wrist features")));
    }
    let stride = positive("stride", a.stride)?;
    let dir = ctx.path(&a.input);
    need_dir(&dir)?;
    let s = load_session(&dir)?;
    let channels = prepare_channels(&s.series)?;
    let labels = (!s.labels.is_empty()).then_some(s.labels.as_slice());
    let fcfg = FeatureConfig { append_biomarkers: a.biomarkers };
    let m = FeatureMatrix::from_channels(&channels, &s.biomarkers, labels, stride, fcfg)?;
    let out = ctx.path(&a.out);
    parent_dir(&out)?;
    write_feature_matrix(&out, &m)?;
    Ok(json!({
        "command": "features wrist",
        "out": out,
        "rows": m.len(),
        "features": m.names.len(),
        "schema_hash": format!("{:016x}", schema_hash(&m.names)),
        "labels": class_counts(m.rows.iter().filter_map(|r| r.label)),
    }))
}

pub fn features_pose(a: &PoseArgs, ctx: &Ctx) -> Result<Value> {
    let window = positive("window", a.window)?;
    let stride = positive("stride", a.stride)?;
    let mask = match &a.features {
        Some(p) => {
            let p = ctx.path(p);
            need_file(&p)?;
            let report: PruneReport = serde_json::from_str(&std::fs::read_to_string(&p)?)
                .map_err(|e| invalid(format!("{}: not a prune report: {e}", p.display())))?;
            report.kept_mask()?
        }
        None => FeatureMask::all(),
    };
    let seqs = match (a.clips, &a.input) {
        (Some(n), _) => {
            if n == 0 {
                return Err(invalid("--clips must be at least 1"));
            }
            let mut spec = ClipSetSpec { per_class: n, duration_s: window, ..Default::default() };
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            clip_sequences(&spec)?
        }
        (None, Some(input)) => {
            let dir = ctx.path(input);
            need_dir(&dir)?;
            let s = load_session(&dir)?;
            let person = match &a.participant {
                Some(p) => p.clone(),
                None => s.person_ids().into_iter().next().ok_or_else(|| invalid("session has no keypoints"))?,
            };
            let frames = s.frames_for(&person);
            if frames.is_empty() {
                return Err(invalid(format!("no keypoints for person {person:?}")));
            }
            let rows = frames_to_rows(&frames, &PoseLayout::default());
            let cfg = SequenceConfig { window_s: window, stride_s: stride, ..Default::default() };
            build_sequences(&rows, &s.labels, &person, &cfg)?
        }
        (None, None) => return Err(invalid("one of --in or --clips is required")),
    };
    let ds = SequenceDataset::from_sequences(&seqs, &mask)?;
    let out = ctx.path(&a.out);
    parent_dir(&out)?;
    write_sequence_dataset(&out, &schema_path(&out), &ds)?;
    Ok(json!({
        "command": "features pose",
        "out": out,
        "schema": schema_path(&out),
        "sequences": ds.samples.len(),
        "positives": ds.samples.iter().filter(|s| s.label).count(),
        "seq_len": ds.seq_len,
        "features": ds.dim(),
    }))
}
