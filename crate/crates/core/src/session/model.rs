use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounts::AccountError;
use crate::ids::{ClassId, ConstructionId, GroupId, SessionId, UserId};
use geolab_store::StoreError;

/// Chat messages longer than this many characters are rejected.
pub const MAX_CHAT_CHARS: usize = 2000;

pub const DEFAULT_SYNC_INTERVAL_MS: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub sync_interval_ms: u64,
    /// When set, a lock holder idle for this long loses the lock.
    pub lock_idle_timeout_ms: Option<u64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            sync_interval_ms: DEFAULT_SYNC_INTERVAL_MS,
            lock_idle_timeout_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub message_id: u64,
    pub group_id: GroupId,
    pub author_id: UserId,
    pub ts: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub group_id: GroupId,
    pub version: u64,
    /// Canonical construction text.
    pub payload: String,
    pub produced_ts: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LockOutcome {
    Granted,
    Held { holder: UserId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LockEvent {
    Granted,
    Released,
    Expired,
    Cleared,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockNotice {
    pub group_id: GroupId,
    pub event: LockEvent,
    pub holder: Option<UserId>,
    pub by: UserId,
}

/// Body of a live-channel envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot(Snapshot),
    Chat(ChatMessage),
    Lock(LockNotice),
    SessionClosed { session_id: SessionId },
    Ack { request: String, result: serde_json::Value },
    Error { request: String, error: String, detail: serde_json::Value },
    Pong {},
}

impl ServerMessage {
    /// Whether the message is replayed to a resuming connection. Snapshots
    /// are replayed too, but only the latest per group.
    pub fn replayable(&self) -> bool {
        matches!(
            self,
            ServerMessage::Chat(_) | ServerMessage::Lock(_) | ServerMessage::SessionClosed { .. }
        )
    }
}

/// One live-channel message. `seq` is strictly increasing per member mailbox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(flatten)]
    pub message: ServerMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum JoinOutcome {
    Member { group_id: GroupId, snapshot: Snapshot },
    Observer { snapshots: Vec<Snapshot> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub snapshot: Snapshot,
    pub individual: BTreeMap<UserId, String>,
    pub members: Vec<UserId>,
    pub lock_holder: Option<UserId>,
}

/// Public summary of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: SessionId,
    pub teacher_id: UserId,
    pub class_id: ClassId,
    pub task_constructions: Vec<ConstructionId>,
    pub config: SessionConfig,
    pub status: SessionStatus,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_id: GroupId,
    pub members: Vec<UserId>,
    pub version: u64,
    pub lock_holder: Option<UserId>,
}

/// What `close_session` persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSession {
    pub session_id: SessionId,
    pub final_constructions: BTreeMap<GroupId, String>,
    pub chat_messages: BTreeMap<GroupId, usize>,
}

/// Durable form of a session, stored under `sessions/<id>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: SessionId,
    pub teacher_id: UserId,
    pub class_id: ClassId,
    pub task_constructions: Vec<ConstructionId>,
    pub config: SessionConfig,
    pub status: SessionStatus,
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub group_id: GroupId,
    pub members: Vec<UserId>,
    pub construction: String,
    pub version: u64,
    pub individual: BTreeMap<UserId, String>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("forbidden")]
    Forbidden,
    #[error("unknown session")]
    UnknownSession,
    #[error("unknown class")]
    UnknownClass,
    #[error("unknown group")]
    UnknownGroup,
    #[error("unknown task construction")]
    UnknownTask,
    #[error("class has no groups")]
    NoGroupsDefined,
    #[error("session is closed")]
    SessionClosed,
    #[error("session already closed")]
    AlreadyClosed,
    #[error("caller does not hold the lock")]
    NotHolder,
    #[error("construction payload rejected: {0}")]
    ParseError(String),
    #[error("empty chat message")]
    EmptyMessage,
    #[error("chat message longer than {MAX_CHAT_CHARS} characters")]
    MessageTooLong,
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Account(#[from] AccountError),
    #[error("corrupt session record: {0}")]
    Corrupt(#[from] serde_json::Error),
    #[error("session worker stopped")]
    WorkerStopped,
}

impl SessionError {
    /// Stable name used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Forbidden => "Forbidden",
            SessionError::UnknownSession => "UnknownSession",
            SessionError::UnknownClass => "UnknownClass",
            SessionError::UnknownGroup => "UnknownGroup",
            SessionError::UnknownTask => "UnknownTask",
            SessionError::NoGroupsDefined => "NoGroupsDefined",
            SessionError::SessionClosed => "SessionClosed",
            SessionError::AlreadyClosed => "AlreadyClosed",
            SessionError::NotHolder => "NotHolder",
            SessionError::ParseError(_) => "ParseError",
            SessionError::EmptyMessage => "EmptyMessage",
            SessionError::MessageTooLong => "MessageTooLong",
            SessionError::InvalidConfig(_) => "InvalidConfig",
            SessionError::Store(_) => "StoreFailure",
            SessionError::Account(_) => "AccountFailure",
            SessionError::Corrupt(_) => "Corrupt",
            SessionError::WorkerStopped => "WorkerStopped",
        }
    }
}

/// One processed lock or export command, in linearization order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub group_id: GroupId,
    pub actor: UserId,
    pub action: AuditAction,
    /// Lock holder before the command ran.
    pub holder_before: Option<UserId>,
    pub holder_after: Option<UserId>,
    pub version_before: u64,
    pub version_after: u64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditAction {
    Claim,
    Release,
    Export,
    Expire,
}
