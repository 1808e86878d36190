use geolab_geometry::{Branch, StepId, StepKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounts::AccountError;
use crate::ids::{LogId, UserId};
use geolab_store::StoreError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigationEvent {
    pub page_id: String,
    pub enter_ts: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_ts: Option<i64>,
}

/// A kernel mutation, recorded with the same kind names and branch
/// numbering as the construction format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum GeometryAction {
    AddStep {
        kind: String,
        inputs: Vec<StepId>,
        params: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branch: Option<u8>,
    },
    RemoveStep {
        id: StepId,
    },
    MoveFreePoint {
        id: StepId,
        x: f64,
        y: f64,
    },
}

impl GeometryAction {
    pub fn add(kind: StepKind, inputs: &[StepId], params: &[f64]) -> Self {
        GeometryAction::AddStep {
            kind: kind.name().to_string(),
            inputs: inputs.to_vec(),
            params: params.to_vec(),
            branch: kind.branch().map(Branch::index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventBody {
    Nav(NavigationEvent),
    Geo(GeometryAction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub ts: i64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl LogEvent {
    pub fn geo(ts: i64, action: GeometryAction) -> Self {
        LogEvent { ts, body: EventBody::Geo(action) }
    }

    pub fn nav(ts: i64, page_id: impl Into<String>, exit_ts: Option<i64>) -> Self {
        LogEvent {
            ts,
            body: EventBody::Nav(NavigationEvent { page_id: page_id.into(), enter_ts: ts, exit_ts }),
        }
    }

    pub fn is_geometry(&self) -> bool {
        matches!(self.body, EventBody::Geo(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogManifest {
    pub log_id: LogId,
    pub student_id: UserId,
    /// Teacher allowed to replay; absent for anonymous recordings.
    pub teacher_id: Option<UserId>,
    pub context: String,
    pub started_ts: i64,
    pub finished: bool,
    /// Closed by a server shutdown before the student finished.
    #[serde(default)]
    pub sealed: bool,
}

impl LogManifest {
    pub fn accepts_events(&self) -> bool {
        !self.finished && !self.sealed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    #[serde(flatten)]
    pub manifest: LogManifest,
    pub events: Vec<LogEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogSummary {
    #[serde(flatten)]
    pub manifest: LogManifest,
    pub event_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub delay_ms: u64,
    pub event_index: usize,
}

#[derive(Debug, Error)]
pub enum RecorderError {
    #[error("forbidden")]
    Forbidden,
    #[error("unknown log")]
    UnknownLog,
    #[error("log no longer accepts events")]
    LogFinished,
    #[error("event at {got} precedes previous event at {last}")]
    TimestampRegression { last: i64, got: i64 },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("end of log")]
    EndOfLog,
    #[error("replay speed must be positive")]
    NonPositiveSpeed,
    #[error("log is not finished")]
    UnfinishedLog,
    #[error("index {index} outside 0..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("bad log export: {0}")]
    Format(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Account(#[from] AccountError),
    #[error("corrupt log record: {0}")]
    Corrupt(#[from] serde_json::Error),
}

impl RecorderError {
    pub fn code(&self) -> &'static str {
        match self {
            RecorderError::Forbidden => "Forbidden",
            RecorderError::UnknownLog => "UnknownLog",
            RecorderError::LogFinished => "LogFinished",
            RecorderError::TimestampRegression { .. } => "TimestampRegression",
            RecorderError::InvalidEvent(_) => "InvalidEvent",
            RecorderError::EndOfLog => "EndOfLog",
            RecorderError::NonPositiveSpeed => "NonPositiveSpeed",
            RecorderError::UnfinishedLog => "UnfinishedLog",
            RecorderError::IndexOutOfRange { .. } => "IndexOutOfRange",
            RecorderError::Format(_) => "FormatError",
            RecorderError::Store(_) => "StoreFailure",
            RecorderError::Account(_) => "AccountFailure",
            RecorderError::Corrupt(_) => "Corrupt",
        }
    }
}

pub type RecorderResult<T> = Result<T, RecorderError>;
