//! Line-oriented export: a manifest object, then one event object per line.

use serde::{Deserialize, Serialize};

use super::model::*;
use super::replay::apply_event;
use crate::ids::{LogId, UserId};
use geolab_geometry::Construction;

pub const LOG_FORMAT_NAME: &str = "geolab-log";
pub const LOG_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    format: String,
    version: u64,
    student: UserId,
    started_ts: i64,
    log_id: LogId,
    #[serde(default)]
    context: String,
    finished: bool,
    #[serde(default)]
    sealed: bool,
}

pub fn export_jsonl(log: &SessionLog) -> String {
    let m = &log.manifest;
    let header = ManifestLine {
        format: LOG_FORMAT_NAME.into(),
        version: LOG_FORMAT_VERSION,
        student: m.student_id.clone(),
        started_ts: m.started_ts,
        log_id: m.log_id.clone(),
        context: m.context.clone(),
        finished: m.finished,
        sealed: m.sealed,
    };
    let mut out = serde_json::to_string(&header).expect("manifest serializes");
    out.push('\n');
    for e in &log.events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

/// Parses an export and checks that timestamps are ordered and every
/// geometry event applies.
pub fn import_jsonl(text: &str) -> RecorderResult<SessionLog> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| RecorderError::Format("empty input".into()))?;
    let header: ManifestLine =
        serde_json::from_str(first).map_err(|e| RecorderError::Format(format!("manifest: {e}")))?;
    if header.format != LOG_FORMAT_NAME {
        return Err(RecorderError::Format(format!("unexpected format {:?}", header.format)));
    }
    if header.version != LOG_FORMAT_VERSION {
        return Err(RecorderError::Format(format!("unsupported version {}", header.version)));
    }
    let mut events = Vec::new();
    let mut c = Construction::new();
    for (n, line) in lines.enumerate() {
        let e: LogEvent =
            serde_json::from_str(line).map_err(|err| RecorderError::Format(format!("event {n}: {err}")))?;
        if let Some(last) = events.last().map(|p: &LogEvent| p.ts) {
            if e.ts < last {
                return Err(RecorderError::TimestampRegression { last, got: e.ts });
            }
        }
        c = apply_event(&c, &e)?;
        events.push(e);
    }
    Ok(SessionLog {
        manifest: LogManifest {
            log_id: header.log_id,
            student_id: header.student,
            teacher_id: None,
            context: header.context,
            started_ts: header.started_ts,
            finished: header.finished,
            sealed: header.sealed,
        },
        events,
    })
}
