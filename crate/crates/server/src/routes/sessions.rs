use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use geolab_core::accounts::ConstructionRecord;
use geolab_core::ids::{ClassId, ConstructionId, GroupId, SessionId};
use geolab_core::session::{
    ChatMessage, ClosedSession, Envelope, JoinOutcome, LockOutcome, Observation, SessionConfig, SessionSummary,
    Snapshot,
};

use super::accounts::payload_text;
use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, Caller};

/// Longest a long-poll request may wait.
pub const MAX_WAIT_MS: u64 = 60_000;
const DEFAULT_WAIT_MS: u64 = 25_000;

fn sid(id: &str) -> SessionId {
    SessionId::from(id)
}

#[derive(Deserialize)]
pub struct OpenBody {
    pub class_id: ClassId,
    #[serde(default)]
    pub task_ids: Vec<ConstructionId>,
    pub sync_interval_ms: Option<u64>,
    pub lock_timeout_ms: Option<u64>,
}

pub async fn open(
    State(st): State<AppState>,
    caller: Caller,
    Json(body): Json<OpenBody>,
) -> ApiResult<(StatusCode, Json<SessionSummary>)> {
    let defaults = st.sessions.defaults();
    let config = SessionConfig {
        sync_interval_ms: body.sync_interval_ms.unwrap_or(defaults.sync_interval_ms),
        lock_idle_timeout_ms: body.lock_timeout_ms.or(defaults.lock_idle_timeout_ms),
    };
    let summary = st
        .sessions
        .open_session(&caller.principal, &body.class_id, &body.task_ids, Some(config))
        .await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

pub async fn list(State(st): State<AppState>, caller: Caller) -> ApiResult<Json<Vec<SessionSummary>>> {
    Ok(Json(st.sessions.list_sessions(&caller.principal).await?))
}

pub async fn summary(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionSummary>> {
    Ok(Json(st.sessions.summary(&caller.principal, &sid(&id)).await?))
}

pub async fn join(State(st): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<JoinOutcome>> {
    Ok(Json(st.sessions.join(&caller.principal, &sid(&id)).await?))
}

pub async fn close(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<ClosedSession>> {
    Ok(Json(st.sessions.close_session(&caller.principal, &sid(&id)).await?))
}

/// Lock claim; a lock held by someone else is a 409 naming the holder.
pub async fn claim_lock(State(st): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Response> {
    match st.sessions.claim_lock(&caller.principal, &sid(&id)).await? {
        LockOutcome::Granted => Ok(Json(json!({ "outcome": "granted", "holder": caller.principal.user_id })).into_response()),
        LockOutcome::Held { holder } => Err(ApiError::new(StatusCode::CONFLICT, "LockHeld", "lock held by another member")
            .with("holder", holder.as_str())),
    }
}

pub async fn release_lock(State(st): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<StatusCode> {
    st.sessions.release_lock(&caller.principal, &sid(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
pub struct PayloadBody {
    pub payload: Value,
}

pub async fn export(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<PayloadBody>,
) -> ApiResult<Json<Value>> {
    let version = st
        .sessions
        .export_to_group(&caller.principal, &sid(&id), payload_text(body.payload)?)
        .await?;
    Ok(Json(json!({ "version": version })))
}

pub async fn import(State(st): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<Snapshot>> {
    Ok(Json(st.sessions.import_from_group(&caller.principal, &sid(&id)).await?))
}

pub async fn get_individual(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let payload = st.sessions.individual(&caller.principal, &sid(&id)).await?;
    Ok(Json(json!({ "payload": payload })))
}

pub async fn put_individual(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<PayloadBody>,
) -> ApiResult<StatusCode> {
    st.sessions
        .save_individual(&caller.principal, &sid(&id), payload_text(body.payload)?)
        .await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
pub struct VersionQuery {
    pub version: Option<u64>,
}

/// Polling fallback: the group snapshot, or 204 if the caller is current.
pub async fn snapshot(
    State(st): State<AppState>,
    caller: Caller,
    Path((id, group)): Path<(String, String)>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    let snap = st
        .sessions
        .current_snapshot(&caller.principal, &sid(&id), Some(GroupId::from(group.as_str())), q.version)
        .await?;
    Ok(match snap {
        Some(s) => Json(s).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Deserialize)]
pub struct ChatBody {
    pub text: String,
    pub group_id: Option<GroupId>,
}

pub async fn post_chat(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<ChatBody>,
) -> ApiResult<(StatusCode, Json<ChatMessage>)> {
    let m = st
        .sessions
        .post_chat(&caller.principal, &sid(&id), body.group_id, body.text)
        .await?;
    Ok((StatusCode::CREATED, Json(m)))
}

#[derive(Deserialize)]
pub struct ChatQuery {
    pub group: Option<GroupId>,
    pub after: Option<u64>,
}

pub async fn read_chat(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<ChatQuery>,
) -> ApiResult<Json<Vec<ChatMessage>>> {
    Ok(Json(st.sessions.read_chat(&caller.principal, &sid(&id), q.group, q.after).await?))
}

#[derive(Deserialize, Default)]
pub struct ScrapbookBody {
    pub title: Option<String>,
}

pub async fn scrapbook(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    body: Option<Json<ScrapbookBody>>,
) -> ApiResult<(StatusCode, Json<ConstructionRecord>)> {
    let title = body.and_then(|b| b.0.title);
    let record = st.sessions.save_scrapbook(&caller.principal, &sid(&id), title).await?;
    Ok((StatusCode::CREATED, Json(record)))
}

pub async fn observe(
    State(st): State<AppState>,
    caller: Caller,
    Path((id, group)): Path<(String, String)>,
) -> ApiResult<Json<Observation>> {
    Ok(Json(st.sessions.observe(&caller.principal, &sid(&id), &GroupId::from(group.as_str())).await?))
}

#[derive(Deserialize)]
pub struct EventsQuery {
    #[serde(default)]
    pub after: u64,
    pub wait_ms: Option<u64>,
}

/// Long-poll fallback for the live channel.
pub async fn events(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> ApiResult<Json<Vec<Envelope>>> {
    let wait = Duration::from_millis(q.wait_ms.unwrap_or(DEFAULT_WAIT_MS).min(MAX_WAIT_MS));
    Ok(Json(st.sessions.wait_events(&caller.principal, &sid(&id), q.after, wait).await?))
}
