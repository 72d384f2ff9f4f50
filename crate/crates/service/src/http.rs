//! HTTP API. Bodies are JSON; unreadable bodies and bad query values are 422.

use std::collections::HashMap;
use std::convert::Infallible;
use std::time::{SystemTime, UNIX_EPOCH};

use agitrack_core::time::Timestamp;
use agitrack_realtime::{DetectedEvent, EventStatus};
use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use crate::error::Error;
use crate::service::Service;
use crate::state::EventChange;
use crate::types::{AlertRecord, ModelKind, ReviewRequest, Timeline};

impl IntoResponse for Error {
    fn into_response(self) -> Response {
        let (code, kind) = match &self {
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            Error::InvalidState(_) => (StatusCode::CONFLICT, "invalid_state"),
            Error::Busy(_) => (StatusCode::CONFLICT, "busy"),
            Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            Error::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (code, Json(json!({ "error": kind, "message": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, Error>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| Error::validation(format!("bad body: {e}")))
}

fn query_num(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<i64>> {
    q.get(key)
        .map(|v| v.parse::<i64>().map_err(|_| Error::validation(format!("{key} must be an integer"))))
        .transpose()
}

fn now() -> Timestamp {
    let ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64);
    Timestamp(ms)
}

async fn auth(State(svc): State<Service>, req: Request, next: Next) -> Response {
    if let Some(token) = &svc.config().token {
        if req.uri().path() != "/healthz" {
            let ok = req
                .headers()
                .get(header::AUTHORIZATION)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.strip_prefix("Bearer "))
                .is_some_and(|t| t == token);
            if !ok {
                return Error::Unauthorized.into_response();
            }
        }
    }
    next.run(req).await
}

async fn healthz(State(svc): State<Service>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "last_seq": svc.store().read(|s| s.last_seq) }))
}

async fn sessions(State(svc): State<Service>) -> Json<serde_json::Value> {
    let list: Vec<_> = svc.store().read(|s| {
        s.sessions
            .values()
            .map(|ss| {
                let n_events = s.events.values().filter(|e| e.event.session_id == ss.info.session_id).count();
                json!({ "session": ss.info, "n_events": n_events, "n_scores": ss.scores.len() })
            })
            .collect()
    });
    Json(json!({ "sessions": list }))
}

async fn timeline(
    State(svc): State<Service>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<Timeline>> {
    let from = query_num(&q, "from_ms")?.map(Timestamp);
    let to = query_num(&q, "to_ms")?.map(Timestamp);
    svc.store()
        .read(|s| {
            let ss = s.sessions.get(&id)?;
            let inside = |t: Timestamp| from.is_none_or(|f| t >= f) && to.is_none_or(|e| t < e);
            let events = s.list_events(None, None).into_iter().filter(|v| v.event.session_id == id).collect();
            Some(Timeline {
                session: ss.info.clone(),
                scores: ss.scores.iter().copied().filter(|p| inside(p.t)).collect(),
                labels: s.effective_labels(&id),
                events,
            })
        })
        .map(Json)
        .ok_or_else(|| Error::NotFound(format!("session {id}")))
}

async fn list_events(State(svc): State<Service>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    let status = q.get("status").filter(|s| !s.is_empty()).map(|s| s.parse::<EventStatus>()).transpose();
    let status = status.map_err(|e| Error::validation(e.to_string()))?;
    let since = query_num(&q, "since")?.map(|c| c.max(0) as u64);
    let (events, cursor) = svc.store().read(|s| (s.list_events(status, since), s.last_seq));
    Ok(Json(json!({ "events": events, "cursor": cursor })).into_response())
}

async fn get_event(State(svc): State<Service>, Path(id): Path<String>) -> ApiResult<Response> {
    let v = svc.store().read(|s| s.view(&id)).ok_or_else(|| Error::NotFound(format!("event {id}")))?;
    Ok(Json(v).into_response())
}

async fn post_event(State(svc): State<Service>, body: Bytes) -> ApiResult<Response> {
    let ev: DetectedEvent = parse_body(&body)?;
    let (view, change) = svc.store().record_event(ev)?;
    let code = if change == EventChange::New { StatusCode::CREATED } else { StatusCode::OK };
    Ok((code, Json(view)).into_response())
}

async fn review(State(svc): State<Service>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: ReviewRequest = parse_body(&body)?;
    let view = svc.store().submit_review(req.into_decision(&id, now()))?;
    Ok(Json(view).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrainBody {
    kind: ModelKind,
}

async fn retrain(State(svc): State<Service>, body: Bytes) -> ApiResult<Response> {
    let b: RetrainBody = parse_body(&body)?;
    let job = svc.trigger_retrain(b.kind)?;
    Ok((StatusCode::CREATED, Json(job)).into_response())
}

async fn get_job(State(svc): State<Service>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(svc.job(&id)?).into_response())
}

async fn models(State(svc): State<Service>) -> Json<serde_json::Value> {
    svc.store().read(|s| Json(json!({ "serving": s.serving, "versions": s.models })))
}

fn sse_event(a: &AlertRecord) -> Result<Event, Infallible> {
    let data = serde_json::to_string(a).unwrap_or_default();
    Ok(Event::default().id(a.cursor.to_string()).event("event_opened").data(data))
}

/// Stream of newly recorded events. `since` (or `Last-Event-ID`) replays
/// stored events after that cursor before going live.
async fn alert_stream(
    State(svc): State<Service>,
    headers: HeaderMap,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let header_cursor = headers.get("last-event-id").and_then(|v| v.to_str().ok()).and_then(|v| v.parse::<i64>().ok());
    let since = query_num(&q, "since")?.or(header_cursor).map(|c| c.max(0) as u64);
    // subscribe before reading the backlog so nothing falls in between
    let rx = svc.store().subscribe();
    let backlog: Vec<AlertRecord> = match since {
        Some(c) => svc.store().read(|s| {
            s.list_events(None, None)
                .into_iter()
                .filter(|v| v.cursor > c)
                .map(|v| AlertRecord::of(&v.event, v.cursor))
                .collect()
        }),
        None => Vec::new(),
    };
    let last = backlog.last().map(|a| a.cursor).or(since).unwrap_or(0);
    let live = stream::unfold((rx, last), |(mut rx, last)| async move {
        loop {
            match rx.recv().await {
                Ok(a) if a.cursor <= last => continue,
                Ok(a) => {
                    let c = a.cursor;
                    return Some((a, (rx, c)));
                }
                Err(RecvError::Lagged(n)) => log::warn!("alert stream lagged by {n}"),
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let s = stream::iter(backlog).chain(live).map(|a| sse_event(&a));
    Ok(Sse::new(s).keep_alive(KeepAlive::default()))
}

pub fn router(svc: Service) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", get(sessions))
        .route("/sessions/{id}/timeline", get(timeline))
        .route("/events", get(list_events).post(post_event))
        .route("/events/{id}", get(get_event))
        .route("/events/{id}/review", post(review))
        .route("/retrain", post(retrain))
        .route("/retrain/{job_id}", get(get_job))
        .route("/alerts/stream", get(alert_stream))
        .route("/models", get(models))
        .layer(middleware::from_fn_with_state(svc.clone(), auth))
        .with_state(svc)
}

/// Serves the API until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, svc: Service) -> std::io::Result<()> {
    axum::serve(listener, router(svc)).await
}
