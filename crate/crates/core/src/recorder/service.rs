use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use geolab_geometry::Construction;
use geolab_store::{Namespace, RecordKey};

use super::model::*;
use super::replay::{apply_event, ReplayCursor};
use crate::accounts::{authorize, Accounts, ActionKind, Principal, Resource, Role};
use crate::ids::{LogId, UserId};

fn manifest_key(id: &LogId) -> RecordKey {
    RecordKey::new(Namespace::Logs, id.as_str())
}

fn events_key(id: &LogId) -> RecordKey {
    RecordKey::new(Namespace::Logs, format!("{id}.events"))
}

/// Append-side state of a log, rebuilt from storage on first use.
struct LiveLog {
    manifest: LogManifest,
    construction: Construction,
    last_ts: Option<i64>,
    count: u64,
}

/// Records stand-alone sessions and serves them back for replay.
pub struct Recorder {
    accounts: Arc<Accounts>,
    live: Mutex<HashMap<LogId, Arc<Mutex<LiveLog>>>>,
}

impl Recorder {
    pub fn new(accounts: Arc<Accounts>) -> Self {
        Recorder { accounts, live: Mutex::new(HashMap::new()) }
    }

    fn check(actor: &Principal, action: ActionKind, m: &LogManifest) -> RecorderResult<()> {
        let resource = Resource::Log { student: m.student_id.clone(), teacher: m.teacher_id.clone() };
        if authorize(actor, action, &resource).is_allow() {
            Ok(())
        } else {
            Err(RecorderError::Forbidden)
        }
    }

    fn load_manifest(&self, id: &LogId) -> RecorderResult<LogManifest> {
        let bytes = self.accounts.store().get(&manifest_key(id))?.ok_or(RecorderError::UnknownLog)?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    fn save_manifest(&self, m: &LogManifest) -> RecorderResult<()> {
        self.accounts.store().put(manifest_key(&m.log_id), serde_json::to_vec(m)?)?;
        Ok(())
    }

    fn load_events(&self, id: &LogId) -> RecorderResult<Vec<LogEvent>> {
        self.accounts
            .store()
            .read_stream(&events_key(id))?
            .iter()
            .map(|b| serde_json::from_slice(b).map_err(RecorderError::from))
            .collect()
    }

    fn live_log(&self, id: &LogId) -> RecorderResult<Arc<Mutex<LiveLog>>> {
        let mut live = self.live.lock().expect("recorder poisoned");
        if let Some(l) = live.get(id) {
            return Ok(l.clone());
        }
        let manifest = self.load_manifest(id)?;
        let events = self.load_events(id)?;
        let mut construction = Construction::new();
        for e in &events {
            construction = apply_event(&construction, e)?;
        }
        let entry = Arc::new(Mutex::new(LiveLog {
            manifest,
            construction,
            last_ts: events.last().map(|e| e.ts),
            count: events.len() as u64,
        }));
        live.insert(id.clone(), entry.clone());
        Ok(entry)
    }

    /// Opens a new log for the caller. Anonymous recordings have no teacher
    /// and can never be replayed.
    pub fn start_recording(&self, actor: &Principal, context: &str) -> RecorderResult<LogManifest> {
        if !authorize(actor, ActionKind::StartRecording, &Resource::Platform).is_allow() {
            return Err(RecorderError::Forbidden);
        }
        let teacher_id = match actor.role {
            Role::Student => actor.teacher_id.clone(),
            _ => None,
        };
        let manifest = LogManifest {
            log_id: LogId::generate(),
            student_id: actor.user_id.clone(),
            teacher_id,
            context: context.to_string(),
            started_ts: self.accounts.now_ms(),
            finished: false,
            sealed: false,
        };
        self.save_manifest(&manifest)?;
        let live = LiveLog { manifest: manifest.clone(), construction: Construction::new(), last_ts: None, count: 0 };
        self.live.lock().expect("recorder poisoned").insert(manifest.log_id.clone(), Arc::new(Mutex::new(live)));
        Ok(manifest)
    }

    /// Durably appends one event and returns its index in the log.
    pub fn append_event(&self, actor: &Principal, id: &LogId, event: LogEvent) -> RecorderResult<u64> {
        let live = self.live_log(id)?;
        let mut log = live.lock().expect("log poisoned");
        Self::check(actor, ActionKind::AppendEvent, &log.manifest)?;
        if !log.manifest.accepts_events() {
            return Err(RecorderError::LogFinished);
        }
        if let Some(last) = log.last_ts {
            if event.ts < last {
                return Err(RecorderError::TimestampRegression { last, got: event.ts });
            }
        }
        let next = apply_event(&log.construction, &event)?;
        let seq = self.accounts.store().append(&events_key(id), serde_json::to_vec(&event)?)?;
        log.construction = next;
        log.last_ts = Some(event.ts);
        log.count += 1;
        Ok(seq)
    }

    pub fn finish_recording(&self, actor: &Principal, id: &LogId) -> RecorderResult<SessionLog> {
        let live = self.live_log(id)?;
        let mut log = live.lock().expect("log poisoned");
        Self::check(actor, ActionKind::AppendEvent, &log.manifest)?;
        if !log.manifest.accepts_events() {
            return Err(RecorderError::LogFinished);
        }
        let mut manifest = log.manifest.clone();
        manifest.finished = true;
        self.save_manifest(&manifest)?;
        log.manifest = manifest.clone();
        Ok(SessionLog { manifest, events: self.load_events(id)? })
    }

    /// Closes every log still being written, leaving `finished` false.
    /// Returns how many were sealed.
    pub fn seal_open_logs(&self) -> RecorderResult<usize> {
        let mut sealed = 0;
        for id in self.accounts.store().list(Namespace::Logs, "")? {
            let id = LogId::from(id.as_str());
            if !self.load_manifest(&id)?.accepts_events() {
                continue;
            }
            let live = self.live_log(&id)?;
            let mut log = live.lock().expect("log poisoned");
            if log.manifest.accepts_events() {
                let mut manifest = log.manifest.clone();
                manifest.sealed = true;
                self.save_manifest(&manifest)?;
                log.manifest = manifest;
                sealed += 1;
            }
        }
        Ok(sealed)
    }

    /// Full log as stored, without any permission check.
    pub fn load(&self, id: &LogId) -> RecorderResult<SessionLog> {
        // hold the append lock so the manifest and events agree
        let live = self.live_log(id)?;
        let log = live.lock().expect("log poisoned");
        Ok(SessionLog { manifest: log.manifest.clone(), events: self.load_events(id)? })
    }

    /// A log readable by the caller: its student's teacher.
    pub fn get_log(&self, actor: &Principal, id: &LogId) -> RecorderResult<SessionLog> {
        let log = self.load(id)?;
        Self::check(actor, ActionKind::OpenReplay, &log.manifest)?;
        Ok(log)
    }

    pub fn open_replay(&self, actor: &Principal, id: &LogId) -> RecorderResult<ReplayCursor> {
        Ok(ReplayCursor::new(Arc::new(self.get_log(actor, id)?)))
    }

    /// Logs of the caller's students, optionally for one student.
    pub fn list_logs(&self, actor: &Principal, student: Option<&UserId>) -> RecorderResult<Vec<LogSummary>> {
        if actor.role != Role::Teacher {
            return Err(RecorderError::Forbidden);
        }
        // naming someone else's student is refused rather than answered empty
        if let Some(s) = student {
            let teacher = self.accounts.user(s)?.and_then(|a| a.teacher_id);
            let resource = Resource::Log { student: s.clone(), teacher };
            if !authorize(actor, ActionKind::ListLogs, &resource).is_allow() {
                return Err(RecorderError::Forbidden);
            }
        }
        let store = self.accounts.store();
        let mut out = Vec::new();
        for id in store.list(Namespace::Logs, "")? {
            let id = LogId::from(id.as_str());
            let manifest = self.load_manifest(&id)?;
            if student.is_some_and(|s| *s != manifest.student_id) {
                continue;
            }
            if Self::check(actor, ActionKind::ListLogs, &manifest).is_err() {
                continue;
            }
            let event_count = store.stream_len(&events_key(&id))?;
            out.push(LogSummary { manifest, event_count });
        }
        out.sort_by(|a, b| {
            (a.manifest.started_ts, a.manifest.log_id.as_str()).cmp(&(b.manifest.started_ts, b.manifest.log_id.as_str()))
        });
        Ok(out)
    }
}
