use std::fmt::Write as _;
use std::path::Path;

use agitrack_core::ingest::{load_session, Session};
use agitrack_core::labels::LabelClass;
use agitrack_forest::ForestModel;
use agitrack_realtime::{
    detection_latency, preagitation_flags, preagitation_lead, run_replay, EngineConfig, Fusion, ScorePoint,
};
use agitrack_seqnet::RecurrentModel;
use serde_json::{json, Value};

use super::{need_dir, need_file, parent_dir, sibling, unit, write_json};
use crate::args::ReplayArgs;
use crate::error::{invalid, Result};
use crate::Ctx;

pub(crate) fn engine_config(ctx: &Ctx, threshold: Option<f64>, fusion: Option<&str>) -> Result<EngineConfig> {
    let mut cfg = ctx.cfg.engine.clone();
    if let Some(t) = threshold {
        cfg.threshold = unit("threshold", t)?;
    }
    if let Some(f) = fusion {
        cfg.fusion = f.parse::<Fusion>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn load_models(
    ctx: &Ctx,
    wrist: Option<&Path>,
    video: Option<&Path>,
) -> Result<(Option<ForestModel>, Option<RecurrentModel>)> {
    let w = wrist
        .map(|p| {
            let p = ctx.path(p);
            need_file(&p)?;
            Ok::<_, crate::CliError>(ForestModel::load(&p)?)
        })
        .transpose()?;
    let v = video
        .map(|p| {
            let p = ctx.path(p);
            need_file(&p)?;
            Ok::<_, crate::CliError>(RecurrentModel::load(&p)?)
        })
        .transpose()?;
    if w.is_none() && v.is_none() {
        return Err(invalid("at least one of --wrist-model or --video-model is required"));
    }
    Ok((w, v))
}

pub(crate) fn load_session_dir(ctx: &Ctx, p: &Path) -> Result<Session> {
    let dir = ctx.path(p);
    need_dir(&dir)?;
    Ok(load_session(&dir)?)
}

fn scores_csv(scores: &[ScorePoint]) -> String {
    let mut s = String::from("t_ms,modality,score\n");
    for p in scores {
        let _ = writeln!(s, "{},{},{}", p.t.millis(), p.modality.name(), p.score);
    }
    s
}

pub fn replay(a: &ReplayArgs, ctx: &Ctx) -> Result<Value> {
    let cfg = engine_config(ctx, a.threshold, a.fusion.as_deref())?;
    let session = load_session_dir(ctx, &a.input)?;
    let (wrist, video) = load_models(ctx, a.wrist_model.as_deref(), a.video_model.as_deref())?;
    let out = run_replay(&session, wrist.as_ref(), video.as_ref(), &cfg)?;

    let log = ctx.path(&a.out);
    parent_dir(&log)?;
    let mut text = String::new();
    for e in &out.events {
        text.push_str(&serde_json::to_string(e)?);
        text.push('\n');
    }
    std::fs::write(&log, text)?;
    if let Some(p) = &a.scores {
        let p = ctx.path(p);
        parent_dir(&p)?;
        std::fs::write(&p, scores_csv(&out.scores))?;
    }

    let duration = session.meta.duration_s;
    let summary = detection_latency(&out.primary, &session.labels, duration);
    let flags = preagitation_flags(&session, &ctx.cfg.preagitation);
    let leads: Vec<Option<f64>> = session
        .labels
        .iter()
        .filter(|l| l.klass == LabelClass::Agitation)
        .map(|l| preagitation_lead(&flags, l.start))
        .collect();
    let report = json!({
        "session_id": session.meta.session_id,
        "engine": cfg,
        "events": out.events.len(),
        "primary_events": out.primary.len(),
        "alerts": out.alerts.len(),
        "detection": summary,
        "preagitation_leads_s": leads,
        "elapsed_s": out.elapsed_s,
        "realtime_factor": if out.elapsed_s > 0.0 { duration / out.elapsed_s } else { f64::INFINITY },
    });
    let report_path = a.report.as_ref().map(|p| ctx.path(p)).unwrap_or_else(|| sibling(&log, "report.json"));
    write_json(&report_path, &report)?;
    Ok(json!({
        "command": "replay",
        "events": log,
        "report": report_path,
        "primary_events": out.primary.len(),
        "recall": summary.recall,
        "false_events_per_hour": summary.false_events_per_hour,
    }))
}
