//! Live channel: one WebSocket per member, carrying the member's mailbox in
//! seq order and accepting a few commands.

use axum::extract::ws::{CloseFrame, Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::response::Response;
use serde::Deserialize;
use serde_json::{json, Value};

use geolab_core::accounts::Principal;
use geolab_core::ids::{GroupId, SessionId};
use geolab_core::session::{Envelope, LockOutcome, ServerMessage, SessionError};

use crate::error::ApiResult;
use crate::routes::accounts::payload_text;
use crate::state::{AppState, Caller};

/// Close code sent after the `session_closed` envelope.
pub const CLOSE_SESSION_CLOSED: u16 = 4410;
pub const CLOSE_FORBIDDEN: u16 = 4403;
pub const CLOSE_SHUTDOWN: u16 = 1001;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum ClientMessage {
    ChatPost {
        text: String,
        #[serde(default)]
        group_id: Option<GroupId>,
    },
    LockClaim,
    LockRelease,
    Export {
        payload: Value,
    },
    Ping,
}

impl ClientMessage {
    fn name(&self) -> &'static str {
        match self {
            ClientMessage::ChatPost { .. } => "chat_post",
            ClientMessage::LockClaim => "lock_claim",
            ClientMessage::LockRelease => "lock_release",
            ClientMessage::Export { .. } => "export",
            ClientMessage::Ping => "ping",
        }
    }
}

/// A client frame; `id` is echoed back in the matching ack or error.
#[derive(Debug, Deserialize)]
pub struct ClientFrame {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub message: ClientMessage,
}

#[derive(Deserialize)]
pub struct ChannelQuery {
    pub resume_after: Option<u64>,
}

pub async fn channel(
    ws: WebSocketUpgrade,
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<ChannelQuery>,
) -> ApiResult<Response> {
    let sid = SessionId::from(id.as_str());
    // membership is checked before the upgrade so refusals are plain HTTP
    st.sessions.summary(&caller.principal, &sid).await?;
    Ok(ws.on_upgrade(move |socket| async move {
        let user = caller.principal.user_id.clone();
        if let Err(e) = run(socket, st, caller.principal, sid.clone(), q.resume_after).await {
            tracing::debug!(session = %sid, user = %user, error = %e, "channel ended");
        }
    }))
}

async fn close(socket: &mut WebSocket, code: u16, reason: &str) {
    let frame = CloseFrame { code, reason: Utf8Bytes::from(reason.to_string()) };
    let _ = socket.send(Message::Close(Some(frame))).await;
}

async fn run(
    mut socket: WebSocket,
    st: AppState,
    principal: Principal,
    sid: SessionId,
    resume_after: Option<u64>,
) -> Result<(), SessionError> {
    let mut changes = st.sessions.handle(&sid)?.subscribe();
    changes.borrow_and_update();
    let mut shutdown = st.shutdown.clone();

    let before = st.sessions.last_seq(&principal, &sid).await?;
    let joined = st.sessions.join(&principal, &sid).await;
    let (initial, mut cursor) = match (resume_after, &joined) {
        (Some(after), Ok(_) | Err(SessionError::SessionClosed)) => st.sessions.resume(&principal, &sid, after).await?,
        (None, Ok(_)) => {
            let batch = st.sessions.events(&principal, &sid, before).await?;
            let high = batch.last().map_or(before, |e| e.seq);
            (batch, high)
        }
        (None, Err(SessionError::SessionClosed)) => {
            close(&mut socket, CLOSE_SESSION_CLOSED, "session closed").await;
            return Ok(());
        }
        (_, Err(_)) => {
            close(&mut socket, CLOSE_FORBIDDEN, "not allowed").await;
            return Ok(());
        }
    };
    if send_all(&mut socket, &initial).await? || joined.is_err() {
        if joined.is_err() {
            close(&mut socket, CLOSE_SESSION_CLOSED, "session closed").await;
        }
        return Ok(());
    }

    loop {
        tokio::select! {
            changed = changes.changed() => {
                if changed.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => handle_frame(&st, &principal, &sid, text.as_str()).await?,
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return Ok(()),
                Some(Ok(_)) => continue,
            },
            _ = shutdown.changed() => {
                close(&mut socket, CLOSE_SHUTDOWN, "server shutting down").await;
                return Ok(());
            }
        }
        let batch = st.sessions.events(&principal, &sid, cursor).await?;
        if let Some(last) = batch.last() {
            cursor = last.seq;
        }
        if send_all(&mut socket, &batch).await? {
            return Ok(());
        }
    }
    Ok(())
}

/// Sends envelopes in order. Returns true once the session-closed notice
/// went out and the socket was closed.
async fn send_all(socket: &mut WebSocket, batch: &[Envelope]) -> Result<bool, SessionError> {
    for e in batch {
        let text = serde_json::to_string(e)?;
        if socket.send(Message::Text(text.into())).await.is_err() {
            return Ok(true);
        }
        if matches!(e.message, ServerMessage::SessionClosed { .. }) {
            close(socket, CLOSE_SESSION_CLOSED, "session closed").await;
            return Ok(true);
        }
    }
    Ok(false)
}

async fn handle_frame(st: &AppState, p: &Principal, sid: &SessionId, text: &str) -> Result<(), SessionError> {
    let frame: ClientFrame = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            let reply = ServerMessage::Error {
                request: "invalid".into(),
                error: "BadRequest".into(),
                detail: json!({ "message": e.to_string() }),
            };
            return st.sessions.reply(sid, &p.user_id, reply).await;
        }
    };
    let request = frame.id.clone().unwrap_or_else(|| frame.message.name().to_string());
    let engine = &st.sessions;
    let outcome: Result<Value, (String, Value)> = match frame.message {
        ClientMessage::Ping => return engine.reply(sid, &p.user_id, ServerMessage::Pong {}).await,
        ClientMessage::ChatPost { text, group_id } => engine
            .post_chat(p, sid, group_id, text)
            .await
            .map(|m| json!(m))
            .map_err(failure),
        ClientMessage::LockClaim => match engine.claim_lock(p, sid).await {
            Ok(LockOutcome::Granted) => Ok(json!({ "holder": p.user_id })),
            Ok(LockOutcome::Held { holder }) => Err(("LockHeld".into(), json!({ "holder": holder }))),
            Err(e) => Err(failure(e)),
        },
        ClientMessage::LockRelease => engine.release_lock(p, sid).await.map(|_| json!({})).map_err(failure),
        ClientMessage::Export { payload } => match payload_text(payload) {
            Ok(text) => engine
                .export_to_group(p, sid, text)
                .await
                .map(|v| json!({ "version": v }))
                .map_err(failure),
            Err(e) => Err((e.code, json!({ "message": e.message }))),
        },
    };
    let reply = match outcome {
        Ok(result) => ServerMessage::Ack { request, result },
        Err((error, detail)) => ServerMessage::Error { request, error, detail },
    };
    engine.reply(sid, &p.user_id, reply).await
}

fn failure(e: SessionError) -> (String, Value) {
    (e.code().to_string(), json!({ "message": e.to_string() }))
}
