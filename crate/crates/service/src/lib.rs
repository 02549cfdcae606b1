//! HTTP facade over interactive agent sessions: create a session, submit
//! queries, stream steps as server-sent events, browse the working directory.

pub mod openapi;
pub mod session;

use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::Deserialize;
use serde_json::{json, Value};

pub use session::{
    AdapterFactory, Artifact, RunRecord, ServiceConfig, Session, SessionError, SessionOverrides, SessionStatus, SessionStore,
    StreamEvent, DEFAULT_IDLE_TTL,
};

pub type AppState = Arc<SessionStore>;

/// Every (method, path) the router serves; the contract document covers exactly these.
pub const ROUTES: [(&str, &str); 11] = [
    ("get", "/health"),
    ("get", "/openapi.json"),
    ("post", "/sessions"),
    ("get", "/sessions/{id}"),
    ("delete", "/sessions/{id}"),
    ("post", "/sessions/{id}/queries"),
    ("get", "/sessions/{id}/runs/{rid}"),
    ("get", "/sessions/{id}/runs/{rid}/stream"),
    ("get", "/sessions/{id}/artifacts"),
    ("get", "/sessions/{id}/artifacts/{path}"),
    ("post", "/sessions/{id}/stop"),
];

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let (status, kind, message) = match self {
            SessionError::Unknown(id) => (StatusCode::NOT_FOUND, "UnknownSession", format!("no session {id}")),
            SessionError::UnknownRun(id) => (StatusCode::NOT_FOUND, "UnknownRun", format!("no run {id}")),
            SessionError::Busy(id) => (StatusCode::CONFLICT, "SessionBusy", format!("session {id} is running a query")),
            SessionError::Closed(id) => (StatusCode::GONE, "SessionClosed", format!("session {id} is closed")),
            SessionError::Invalid(m) => (StatusCode::BAD_REQUEST, "InvalidRequest", m),
            SessionError::PathEscape(p) => (StatusCode::BAD_REQUEST, "PathEscape", format!("'{p}' is outside the working directory")),
            SessionError::NotFound(p) => (StatusCode::NOT_FOUND, "NotFound", format!("no artifact '{p}'")),
            SessionError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal", m),
        };
        error_response(status, kind, &message)
    }
}

fn error_response(status: StatusCode, kind: &str, message: &str) -> Response {
    (status, Json(json!({ "error": kind, "message": message }))).into_response()
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, SessionError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| SessionError::Invalid(format!("malformed request body: {e}")))
}

pub fn router(state: AppState) -> Router {
    let protected = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/queries", post(post_query))
        .route("/sessions/{id}/runs/{rid}", get(get_run))
        .route("/sessions/{id}/runs/{rid}/stream", get(stream_run))
        .route("/sessions/{id}/artifacts", get(list_artifacts))
        .route("/sessions/{id}/artifacts/{*path}", get(get_artifact))
        .route("/sessions/{id}/stop", post(stop_session))
        .route_layer(middleware::from_fn_with_state(Arc::clone(&state), require_token));
    Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/openapi.json", get(|| async { Json(openapi::document()) }))
        .merge(protected)
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let Some(token) = &state.config().token else {
        return next.run(req).await;
    };
    let presented = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if presented.is_some_and(|p| constant_time_eq(p.as_bytes(), token.as_bytes())) {
        next.run(req).await
    } else {
        error_response(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong bearer token")
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, SessionError> {
    let overrides: SessionOverrides = parse_body(&body)?;
    let store = Arc::clone(&state);
    let session = tokio::task::spawn_blocking(move || store.create(&overrides))
        .await
        .map_err(|e| SessionError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(session.info())).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, SessionError> {
    Ok(Json(state.get(&id)?.info()))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, SessionError> {
    let session = state.get(&id)?;
    tokio::task::spawn_blocking(move || session.close()).await.map_err(|e| SessionError::Internal(e.to_string()))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    query: String,
}

async fn post_query(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, SessionError> {
    let session = state.get(&id)?;
    let req: QueryRequest = parse_body(&body)?;
    let run = session.post_query(req.query)?;
    let body = json!({
        "run_id": run.id,
        "status": "running",
        "stream": format!("/sessions/{id}/runs/{}/stream", run.id),
    });
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

async fn get_run(State(state): State<AppState>, Path((id, rid)): Path<(String, String)>) -> Result<Json<Value>, SessionError> {
    Ok(Json(state.get(&id)?.run(&rid)?.info()))
}

#[derive(Debug, Default, Deserialize)]
struct StreamParams {
    last_event_id: Option<u64>,
}

async fn stream_run(
    State(state): State<AppState>,
    Path((id, rid)): Path<(String, String)>,
    Query(params): Query<StreamParams>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, SessionError> {
    let run = state.get(&id)?.run(&rid)?;
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .or(params.last_event_id)
        .unwrap_or(0);
    Ok(Sse::new(event_stream(run, resume as usize)).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

/// Past events after `cursor`, then live ones, ending after the summary.
pub fn event_stream(run: Arc<RunRecord>, cursor: usize) -> impl Stream<Item = Result<Event, Infallible>> {
    let rx = run.subscribe();
    stream::unfold((run, cursor, rx), |(run, cursor, mut rx)| async move {
        loop {
            match run.next_event(cursor) {
                Ok(e) => {
                    let event = Event::default().id(e.id.to_string()).event(e.kind).data(e.data);
                    return Some((Ok(event), (run, cursor + 1, rx)));
                }
                Err(true) => return None,
                Err(false) => {
                    if rx.changed().await.is_err() {
                        return None;
                    }
                }
            }
        }
    })
}

async fn list_artifacts(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Vec<Artifact>>, SessionError> {
    let session = state.get(&id)?;
    let list = tokio::task::spawn_blocking(move || session.list_artifacts())
        .await
        .map_err(|e| SessionError::Internal(e.to_string()))??;
    Ok(Json(list))
}

async fn get_artifact(State(state): State<AppState>, Path((id, path)): Path<(String, String)>) -> Result<Response, SessionError> {
    let session = state.get(&id)?;
    let rel = path.clone();
    let bytes = tokio::task::spawn_blocking(move || session.read_artifact(&rel))
        .await
        .map_err(|e| SessionError::Internal(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

fn content_type(path: &str) -> &'static str {
    match path.rsplit('.').next().unwrap_or("") {
        "json" | "jsonl" => "application/json",
        "md" => "text/markdown; charset=utf-8",
        "txt" | "log" | "csv" | "py" => "text/plain; charset=utf-8",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "svg" => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn stop_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, SessionError> {
    let stopping = state.get(&id)?.stop()?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "stopping": stopping }))).into_response())
}

/// Serves until the listener fails, closing idle sessions in the background.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    let sweeper = Arc::clone(&state);
    let period = (state.config().idle_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let s = Arc::clone(&sweeper);
            let closed = tokio::task::spawn_blocking(move || s.sweep_idle()).await.unwrap_or_default();
            if !closed.is_empty() {
                tracing::info!(count = closed.len(), "closed idle sessions");
            }
        }
    });
    axum::serve(listener, router(state)).await
}
