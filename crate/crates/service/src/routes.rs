//! HTTP and WebSocket handlers.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use interviewer_core::transcript::{AgentProfile, SessionStatus, StoreError};
use interviewer_core::{ClientEvent, SessionError, SessionTranscript, TranscriptEvent};
use interviewer_pipeline::PipelineError;
use serde::Deserialize;
use serde_json::json;

use crate::sessions::{CreateError, SessionSlot};
use crate::wire::{stream_path, transcript_path, ServerControl};
use crate::AppState;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/pipeline/runs", post(start_run))
        .route("/pipeline/runs/{id}", get(get_run))
        .with_state(state)
}

/// An error response: `{"error": {"code", "message"}}`.
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Closed => ApiError::new(StatusCode::CONFLICT, "session_closed", e.to_string()),
            SessionError::InvalidTurn(_) | SessionError::Stream(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_event", e.to_string())
            }
            other => ApiError::internal(other),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) | StoreError::InvalidId(id) => ApiError::not_found(format!("no session {id}")),
            other => ApiError::internal(other),
        }
    }
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    script_id: String,
    #[serde(default = "default_profile")]
    agent_profile: AgentProfile,
    #[serde(default)]
    date: Option<String>,
}

fn default_profile() -> AgentProfile {
    AgentProfile::AndroidLike
}

fn today() -> String {
    time::OffsetDateTime::now_utc().date().to_string()
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    let date = req.date.or_else(|| Some(today()));
    let (slot, opening) = state
        .sessions
        .create(&req.script_id, req.agent_profile, date)
        .map_err(|e| match e {
            CreateError::UnknownScript(_) => ApiError::not_found(e.to_string()),
            other => ApiError::internal(other),
        })?;
    let body = json!({
        "session_id": slot.session_id,
        "script_id": req.script_id,
        "stream": stream_path(&slot.session_id),
        "transcript": transcript_path(&slot.session_id),
        "events": opening,
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

/// A session that is no longer live: closed if stored, else unknown.
fn not_live(state: &AppState, id: &str) -> ApiError {
    match state.sessions.store().load(id) {
        Ok(t) if t.is_finalized() => ApiError::from(SessionError::Closed),
        Ok(_) => ApiError::new(StatusCode::CONFLICT, "session_orphaned", format!("session {id} is not live")),
        Err(e) => e.into(),
    }
}

async fn post_event(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ClientEvent>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<Vec<TranscriptEvent>>, ApiError> {
    let slot = state.sessions.get(&id).ok_or_else(|| not_live(&state, &id))?;
    let Json(event) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    Ok(Json(slot.apply(event).await?))
}

async fn get_transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let bytes = state.sessions.store().load_bytes(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

#[derive(Debug, Deserialize)]
struct StreamQuery {
    #[serde(default)]
    after_seq: u64,
}

async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<StreamQuery>,
    upgrade: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let heartbeat = Duration::from_secs_f64(state.config.timing.heartbeat_s);
    if let Some(slot) = state.sessions.get(&id) {
        if !slot.connect() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "already_connected",
                format!("session {id} already has a stream"),
            ));
        }
        return Ok(upgrade.on_upgrade(move |socket| async move {
            live_stream(socket, slot.clone(), query.after_seq, heartbeat).await;
            slot.disconnect();
        }));
    }
    // not live: replay what was stored
    let transcript = state.sessions.store().load(&id)?;
    Ok(upgrade.on_upgrade(move |socket| stored_stream(socket, transcript, query.after_seq)))
}

fn text(value: &impl serde::Serialize) -> Message {
    Message::Text(serde_json::to_string(value).expect("wire values serialize").into())
}

async fn stored_stream(mut socket: WebSocket, transcript: SessionTranscript, after: u64) {
    for e in transcript.events.iter().filter(|e| e.seq > after) {
        if socket.send(text(e)).await.is_err() {
            return;
        }
    }
    let control = match transcript.status {
        SessionStatus::Active => ServerControl::error("session_orphaned", "session is not live"),
        status => ServerControl::complete(&transcript.session_id, status),
    };
    let _ = socket.send(text(&control)).await;
    let _ = socket.close().await;
}

async fn live_stream(socket: WebSocket, slot: Arc<SessionSlot>, after: u64, heartbeat: Duration) {
    let (mut sink, mut incoming) = socket.split();
    let mut progress = slot.subscribe();
    let mut next_after = after;
    let mut beat = tokio::time::interval_at(tokio::time::Instant::now() + heartbeat, heartbeat);
    loop {
        let (events, status) = slot.events_after(next_after).await;
        for e in &events {
            if sink.send(text(e)).await.is_err() {
                return;
            }
            next_after = e.seq;
        }
        if status != SessionStatus::Active {
            let _ = sink.send(text(&ServerControl::complete(&slot.session_id, status))).await;
            let _ = sink.close().await;
            return;
        }
        tokio::select! {
            changed = progress.changed() => {
                if changed.is_err() {
                    return;
                }
            }
            message = incoming.next() => match message {
                Some(Ok(Message::Text(body))) => {
                    let reply = match serde_json::from_str::<ClientEvent>(&body) {
                        Ok(event) => slot.apply(event).await.err().map(|e| {
                            let api = ApiError::from(e);
                            ServerControl::error(api.code, api.message)
                        }),
                        Err(e) => Some(ServerControl::error("bad_request", e.to_string())),
                    };
                    if let Some(control) = reply {
                        if sink.send(text(&control)).await.is_err() {
                            return;
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
            _ = beat.tick() => {
                if sink.send(text(&ServerControl::Heartbeat)).await.is_err() {
                    return;
                }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SessionSelection {
    All(AllKeyword),
    Ids(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AllKeyword {
    All,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartRun {
    sessions: SessionSelection,
}

async fn start_run(
    State(state): State<AppState>,
    body: Result<Json<StartRun>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    let store = state.sessions.store();
    let ids = match req.sessions {
        SessionSelection::Ids(ids) => ids,
        SessionSelection::All(_) => store
            .list_sessions(&interviewer_core::transcript::SessionFilter {
                status: None,
                ..Default::default()
            })?
            .into_iter()
            .filter(|id| store.load(id).is_ok_and(|t| t.is_finalized()))
            .collect(),
    };
    if ids.is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_sessions", "no finalized sessions selected"));
    }
    let mut transcripts = Vec::new();
    for id in &ids {
        let t = store.load(id)?;
        if !t.is_finalized() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "session_active",
                format!("session {id} is not finalized"),
            ));
        }
        transcripts.push(t);
    }
    let script_id = transcripts[0].script_id.clone();
    if let Some(t) = transcripts.iter().find(|t| t.script_id != script_id) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "mixed_scripts",
            format!("sessions use scripts {script_id} and {}", t.script_id),
        ));
    }
    let script = state
        .sessions
        .script(&script_id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown script `{script_id}`")))?;
    let run_id = state.runs.start(transcripts, script).map_err(|e| match e {
        PipelineError::DuplicateSession(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_request", e.to_string()),
        other => ApiError::internal(other),
    })?;
    let status = state.runs.status(&run_id).ok_or_else(|| ApiError::internal("run vanished"))?;
    Ok((StatusCode::ACCEPTED, Json(status)).into_response())
}

async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let status = state
        .runs
        .status(&id)
        .ok_or_else(|| ApiError::not_found(format!("no run {id}")))?;
    Ok(Json(status).into_response())
}
