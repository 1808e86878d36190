use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use geolab_core::ids::{LogId, UserId};
use geolab_core::recorder::{
    export_jsonl, reconstruct_at, replay_schedule, LogEvent, LogManifest, LogSummary, ScheduleEntry, SessionLog,
};
use geolab_geometry::serialize_construction;

use crate::error::ApiResult;
use crate::state::{AppState, Caller};

fn lid(id: &str) -> LogId {
    LogId::from(id)
}

#[derive(Deserialize, Default)]
pub struct StartBody {
    #[serde(default)]
    pub context: String,
}

pub async fn start(
    State(st): State<AppState>,
    caller: Caller,
    body: Option<Json<StartBody>>,
) -> ApiResult<(StatusCode, Json<LogManifest>)> {
    let context = body.map(|b| b.0.context).unwrap_or_default();
    Ok((StatusCode::CREATED, Json(st.recorder.start_recording(&caller.principal, &context)?)))
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum EventsBody {
    Many(Vec<LogEvent>),
    One(LogEvent),
}

/// Appends one event or a batch; answers with the index of each.
pub async fn append(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<EventsBody>,
) -> ApiResult<Json<Value>> {
    let id = lid(&id);
    match body {
        EventsBody::One(e) => {
            let position = st.recorder.append_event(&caller.principal, &id, e)?;
            Ok(Json(json!({ "position": position })))
        }
        EventsBody::Many(events) => {
            let mut positions = Vec::with_capacity(events.len());
            for e in events {
                positions.push(st.recorder.append_event(&caller.principal, &id, e)?);
            }
            Ok(Json(json!({ "positions": positions })))
        }
    }
}

pub async fn finish(State(st): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<SessionLog>> {
    Ok(Json(st.recorder.finish_recording(&caller.principal, &lid(&id))?))
}

#[derive(Deserialize)]
pub struct ListQuery {
    pub student: Option<UserId>,
}

pub async fn list(
    State(st): State<AppState>,
    caller: Caller,
    Query(q): Query<ListQuery>,
) -> ApiResult<Json<Vec<LogSummary>>> {
    Ok(Json(st.recorder.list_logs(&caller.principal, q.student.as_ref())?))
}

pub async fn get(State(st): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<SessionLog>> {
    Ok(Json(st.recorder.get_log(&caller.principal, &lid(&id))?))
}

#[derive(Deserialize)]
pub struct IndexQuery {
    pub index: Option<usize>,
}

pub async fn reconstruct(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<IndexQuery>,
) -> ApiResult<Json<Value>> {
    let log = st.recorder.get_log(&caller.principal, &lid(&id))?;
    let index = q.index.unwrap_or(log.events.len());
    let (c, eval) = reconstruct_at(&log, index)?;
    let payload = String::from_utf8(serialize_construction(&c)).expect("canonical form is UTF-8");
    Ok(Json(json!({
        "index": index,
        "event_count": log.events.len(),
        "construction": payload,
        "evaluation": eval,
    })))
}

#[derive(Deserialize)]
pub struct SpeedQuery {
    pub speed: Option<f64>,
}

pub async fn schedule(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<SpeedQuery>,
) -> ApiResult<Json<Vec<ScheduleEntry>>> {
    let log = st.recorder.get_log(&caller.principal, &lid(&id))?;
    Ok(Json(replay_schedule(&log, q.speed.unwrap_or(1.0))?))
}

pub async fn export(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    let log = st.recorder.get_log(&caller.principal, &lid(&id))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], export_jsonl(&log)))
}

