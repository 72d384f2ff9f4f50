use std::sync::Arc;
use std::time::{Duration, Instant};

use agitrack_core::ingest::Session;
use agitrack_forest::ForestModel;
use agitrack_realtime::{
    video_scores, wrist_scores, DetectedEvent, Engine, EngineConfig, Fusion, ScorePoint, SessionBounds, StepOutput,
};
use agitrack_seqnet::RecurrentModel;
use agitrack_service::{ModelKind, PipelineTrainer, Service, ServiceConfig, SessionInfo, StoreConfig};
use serde_json::{json, Value};

use super::replay::{engine_config, load_session_dir};
use super::need_file;
use crate::args::ServeArgs;
use crate::error::{invalid, CliError, Result};
use crate::Ctx;

/// Score points are written to the store in batches of this size.
const SCORE_BATCH: usize = 60;

fn read_model_file(ctx: &Ctx, p: Option<&std::path::Path>) -> Result<Option<String>> {
    p.map(|p| {
        let p = ctx.path(p);
        need_file(&p)?;
        Ok(std::fs::read_to_string(&p)?)
    })
    .transpose()
}

struct Feed {
    svc: Service,
    session: Session,
    wrist: Option<ForestModel>,
    video: Option<RecurrentModel>,
    cfg: EngineConfig,
    speed: f64,
}

fn record(svc: &Service, e: &DetectedEvent) {
    if let Err(err) = svc.store().record_event(e.clone()) {
        log::warn!("event {} not stored: {err}", e.event_id);
    }
}

impl Feed {
    /// Streams the session's window scores through an engine, writing each
    /// event change and the scores to the store. Returns the number of
    /// distinct events.
    fn run(self) -> Result<usize> {
        let mut scores: Vec<ScorePoint> = Vec::new();
        if let Some(m) = self.wrist.as_ref().filter(|_| self.cfg.fusion != Fusion::VideoOnly) {
            scores.extend(wrist_scores(&self.session, m)?);
        }
        if let Some(m) = self.video.as_ref().filter(|_| self.cfg.fusion != Fusion::WristOnly) {
            scores.extend(video_scores(&self.session, m)?);
        }
        scores.sort_by(|a, b| (a.t, a.modality).cmp(&(b.t, b.modality)));
        let id = self.session.meta.session_id.clone();
        let t0 = self.session.meta.t0;
        let bounds = SessionBounds::new(t0, Some(self.session.meta.end()));
        let mut engine = Engine::new(id.clone(), self.cfg.clone(), bounds)?;
        let started = Instant::now();
        let mut pending = Vec::new();
        let flush = |pending: &mut Vec<ScorePoint>| {
            if let Err(e) = self.svc.store().append_scores(&id, std::mem::take(pending)) {
                log::warn!("scores not stored: {e}");
            }
        };
        let apply = |out: &StepOutput| {
            for t in &out.transitions {
                record(&self.svc, &t.event);
            }
        };
        for p in &scores {
            if self.speed > 0.0 {
                let due = Duration::from_secs_f64((p.t.secs_since(t0) / self.speed).max(0.0));
                if let Some(wait) = due.checked_sub(started.elapsed()) {
                    std::thread::sleep(wait);
                }
            }
            let out = engine.push_window_score(p.modality, p.t, p.score)?;
            pending.push(*p);
            if !out.transitions.is_empty() || pending.len() >= SCORE_BATCH {
                flush(&mut pending);
            }
            apply(&out);
        }
        flush(&mut pending);
        apply(&engine.finish());
        Ok(engine.events().len())
    }
}

pub fn serve(a: &ServeArgs, ctx: &Ctx) -> Result<Value> {
    let cfg = engine_config(ctx, a.threshold, a.fusion.as_deref())?;
    if !(a.speed >= 0.0) || !a.speed.is_finite() {
        return Err(invalid("--speed must be a non-negative number"));
    }
    if a.exit_after_replay && a.input.is_none() {
        return Err(invalid("--exit-after-replay needs --in"));
    }
    let addr: std::net::SocketAddr = a.addr.parse().map_err(|_| invalid(format!("bad --addr {:?}", a.addr)))?;
    let wrist_text = read_model_file(ctx, a.wrist_model.as_deref())?;
    let video_text = read_model_file(ctx, a.video_model.as_deref())?;
    let session = a.input.as_ref().map(|p| load_session_dir(ctx, p)).transpose()?;
    if session.is_some() && wrist_text.is_none() && video_text.is_none() {
        return Err(invalid("replaying needs --wrist-model or --video-model"));
    }
    let wrist = wrist_text.as_deref().map(ForestModel::from_json).transpose()?;
    let video = video_text.as_deref().map(RecurrentModel::from_json).transpose()?;

    let mut pipeline = ctx.cfg.retrain.clone();
    if let Some(s) = a.seed {
        pipeline.seed = s;
    }
    let store_dir = ctx.path(&a.store);
    let svc_cfg = ServiceConfig { store: StoreConfig::default(), token: a.token.clone(), ..Default::default() };
    let svc = Service::open(&store_dir, svc_cfg, Arc::new(PipelineTrainer::new(pipeline)))?;
    for (kind, text) in [(ModelKind::Forest, &wrist_text), (ModelKind::Recurrent, &video_text)] {
        if let Some(text) = text {
            if svc.store().read(|s| s.serving_model(kind).is_none()) {
                svc.install_model(kind, text, None, None)?;
            }
        }
    }

    let feeder = match session {
        Some(session) => {
            let dir = a.input.as_ref().map(|p| ctx.path(p));
            let info = SessionInfo {
                session_id: session.meta.session_id.clone(),
                participant_id: session.meta.participant_id.clone(),
                t0: session.meta.t0,
                duration_s: session.meta.duration_s,
                dir: dir.map(|d| std::fs::canonicalize(&d).unwrap_or(d).display().to_string()),
                labeled: a.labeled,
            };
            let labels = if a.labeled { session.labels.clone() } else { Vec::new() };
            svc.store().register_session(info, labels)?;
            let feed = Feed { svc: svc.clone(), session, wrist, video, cfg, speed: a.speed };
            Some(std::thread::spawn(move || feed.run()))
        }
        None => None,
    };

    if a.exit_after_replay {
        let n = feeder
            .map(|h| h.join().map_err(|_| CliError::Runtime("replay thread panicked".into()))?)
            .transpose()?
            .unwrap_or(0);
        svc.join_workers();
        return Ok(json!({ "command": "serve", "store": store_dir, "events": n }));
    }

    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let bound = listener.local_addr()?;
        println!("{}", json!({ "command": "serve", "listening": bound.to_string(), "store": store_dir }));
        log::info!("listening on {bound}");
        agitrack_service::http::serve(listener, svc.clone()).await
    })?;
    Ok(json!({ "command": "serve", "store": store_dir }))
}
