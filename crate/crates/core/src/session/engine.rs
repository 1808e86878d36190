use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tokio::sync::{mpsc, oneshot, watch};
use tokio::time::{Instant, MissedTickBehavior};

use super::model::*;
use super::state::{empty_payload, validate_config, OpenParams, SessionSink, SessionState};
use crate::accounts::{
    authorize, AccountError, Accounts, ActionKind, ConstructionRecord, Principal, Resource, Role,
};
use crate::clock::Clock;
use crate::ids::{ClassId, ConstructionId, GroupId, SessionId, UserId};
use geolab_store::{Namespace, RecordKey, Store};

pub type SessionResult<T> = Result<T, SessionError>;

/// Persists session records and chat streams in the store.
pub struct StoreSink {
    store: Store,
}

impl StoreSink {
    pub fn new(store: Store) -> Self {
        StoreSink { store }
    }
}

fn session_key(id: &SessionId) -> RecordKey {
    RecordKey::new(Namespace::Sessions, id.as_str())
}

fn chat_key(id: &SessionId) -> RecordKey {
    RecordKey::new(Namespace::Chats, id.as_str())
}

impl SessionSink for StoreSink {
    fn save_session(&self, record: &SessionRecord) -> SessionResult<()> {
        self.store.put(session_key(&record.session_id), serde_json::to_vec(record)?)?;
        Ok(())
    }

    fn append_chat(&self, session: &SessionId, message: &ChatMessage) -> SessionResult<()> {
        self.store.append(&chat_key(session), serde_json::to_vec(message)?)?;
        Ok(())
    }
}

/// Everything a queued command can touch.
pub struct Worker {
    pub state: SessionState,
    sink: Arc<dyn SessionSink>,
    accounts: Arc<Accounts>,
    clock: Arc<dyn Clock>,
    stop: bool,
}

impl Worker {
    pub fn now(&self) -> i64 {
        self.clock.now_ms()
    }
}

type Job = Box<dyn FnOnce(&mut Worker) + Send>;

/// Entry point to one session's command queue.
#[derive(Clone)]
pub struct SessionHandle {
    id: SessionId,
    teacher_id: UserId,
    tx: mpsc::UnboundedSender<Job>,
    changes: watch::Receiver<u64>,
}

impl SessionHandle {
    pub fn id(&self) -> &SessionId {
        &self.id
    }

    /// Runs `f` on the session worker after every previously queued command.
    pub async fn call<R, F>(&self, f: F) -> SessionResult<R>
    where
        R: Send + 'static,
        F: FnOnce(&mut Worker) -> R + Send + 'static,
    {
        let (tx, rx) = oneshot::channel();
        let job: Job = Box::new(move |w| {
            let _ = tx.send(f(w));
        });
        self.tx.send(job).map_err(|_| SessionError::WorkerStopped)?;
        rx.await.map_err(|_| SessionError::WorkerStopped)
    }

    /// Receiver that changes whenever an envelope is queued in any mailbox.
    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.changes.clone()
    }
}

async fn run_worker(mut worker: Worker, mut rx: mpsc::UnboundedReceiver<Job>, changes: watch::Sender<u64>) {
    while let Some(job) = rx.recv().await {
        job(&mut worker);
        let queued = worker.state.queued();
        changes.send_if_modified(|v| {
            let moved = *v != queued;
            *v = queued;
            moved
        });
        if worker.stop {
            break;
        }
    }
}

async fn run_scheduler(handle: SessionHandle, interval_ms: u64) {
    let period = Duration::from_millis(interval_ms);
    let mut ticks = tokio::time::interval_at(Instant::now() + period, period);
    ticks.set_missed_tick_behavior(MissedTickBehavior::Burst);
    loop {
        ticks.tick().await;
        let tick = handle
            .call(|w| {
                let now = w.now();
                w.state.tick_all(now)
            })
            .await;
        match tick {
            Ok(Ok(_)) => {}
            Ok(Err(_)) | Err(_) => break,
        }
    }
}

/// Registry of live sessions. Each session is served by its own task that
/// applies commands one at a time in arrival order.
pub struct SessionEngine {
    accounts: Arc<Accounts>,
    sink: Arc<dyn SessionSink>,
    clock: Arc<dyn Clock>,
    defaults: SessionConfig,
    sessions: Mutex<HashMap<SessionId, SessionHandle>>,
}

impl SessionEngine {
    /// Creates the engine and reloads persisted sessions. Must be called
    /// inside a tokio runtime.
    pub fn start(accounts: Arc<Accounts>, clock: Arc<dyn Clock>, defaults: SessionConfig) -> SessionResult<Arc<Self>> {
        validate_config(&defaults)?;
        let sink: Arc<dyn SessionSink> = Arc::new(StoreSink::new(accounts.store().clone()));
        let engine = Arc::new(SessionEngine {
            accounts,
            sink,
            clock,
            defaults,
            sessions: Mutex::new(HashMap::new()),
        });
        engine.restore()?;
        Ok(engine)
    }

    pub fn defaults(&self) -> SessionConfig {
        self.defaults
    }

    fn restore(&self) -> SessionResult<()> {
        let store = self.accounts.store();
        for id in store.list(Namespace::Sessions, "")? {
            let sid = SessionId::from(id.as_str());
            let Some(bytes) = store.get(&session_key(&sid))? else { continue };
            let record: SessionRecord = serde_json::from_slice(&bytes)?;
            let chats = store
                .read_stream(&chat_key(&sid))?
                .iter()
                .map(|b| serde_json::from_slice(b))
                .collect::<Result<Vec<ChatMessage>, _>>()?;
            let state = SessionState::restore(record, chats);
            tracing::debug!(session = %sid, open = state.is_open(), "restored session");
            self.spawn(state);
        }
        Ok(())
    }

    fn spawn(&self, state: SessionState) -> SessionHandle {
        let (tx, rx) = mpsc::unbounded_channel();
        let (changes_tx, changes_rx) = watch::channel(0);
        let handle = SessionHandle {
            id: state.id().clone(),
            teacher_id: state.teacher_id().clone(),
            tx,
            changes: changes_rx,
        };
        let open = state.is_open();
        let interval = state.config().sync_interval_ms;
        let worker = Worker {
            state,
            sink: self.sink.clone(),
            accounts: self.accounts.clone(),
            clock: self.clock.clone(),
            stop: false,
        };
        tokio::spawn(run_worker(worker, rx, changes_tx));
        if open {
            tokio::spawn(run_scheduler(handle.clone(), interval));
        }
        self.sessions.lock().expect("registry poisoned").insert(handle.id.clone(), handle.clone());
        handle
    }

    pub fn handle(&self, id: &SessionId) -> SessionResult<SessionHandle> {
        self.sessions
            .lock()
            .expect("registry poisoned")
            .get(id)
            .cloned()
            .ok_or(SessionError::UnknownSession)
    }

    /// Stops every session worker. Persisted state is left as is.
    pub async fn shutdown(&self) {
        let handles: Vec<SessionHandle> = self.sessions.lock().expect("registry poisoned").drain().map(|(_, h)| h).collect();
        for h in handles {
            let _ = h.call(|w| w.stop = true).await;
        }
    }

    pub async fn open_session(
        &self,
        actor: &Principal,
        class_id: &ClassId,
        task_ids: &[ConstructionId],
        config: Option<SessionConfig>,
    ) -> SessionResult<SessionSummary> {
        let Some(class) = self.accounts.class(class_id)? else {
            return Err(if actor.role == Role::Teacher {
                SessionError::UnknownClass
            } else {
                SessionError::Forbidden
            });
        };
        let resource = Resource::Class { owner: class.teacher_id.clone() };
        if !authorize(actor, ActionKind::OpenSession, &resource).is_allow() {
            return Err(SessionError::Forbidden);
        }
        let config = config.unwrap_or(self.defaults);
        validate_config(&config)?;
        let groups = self.accounts.groups_of_class(class_id)?;
        if groups.is_empty() {
            return Err(SessionError::NoGroupsDefined);
        }
        let mut initial = None;
        for id in task_ids {
            match self.accounts.read_construction(actor, id) {
                Ok(record) => {
                    initial.get_or_insert(record.payload);
                }
                Err(AccountError::UnknownConstruction) => return Err(SessionError::UnknownTask),
                Err(AccountError::Forbidden) => return Err(SessionError::Forbidden),
                Err(e) => return Err(e.into()),
            }
        }
        let state = SessionState::open(OpenParams {
            id: SessionId::generate(),
            teacher_id: actor.user_id.clone(),
            class_id: class_id.clone(),
            tasks: task_ids.to_vec(),
            config,
            groups,
            initial_payload: initial.unwrap_or_else(empty_payload),
        })?;
        self.sink.save_session(&state.record())?;
        let summary = state.summary();
        self.spawn(state);
        tracing::info!(session = %summary.session_id, class = %class_id, "session opened");
        Ok(summary)
    }

    /// Sessions taught by `actor`, or the one a student belongs to.
    pub async fn list_sessions(&self, actor: &Principal) -> SessionResult<Vec<SessionSummary>> {
        let handles: Vec<SessionHandle> = self.sessions.lock().expect("registry poisoned").values().cloned().collect();
        let mut out = Vec::new();
        for h in handles {
            if actor.role == Role::Teacher && h.teacher_id != actor.user_id {
                continue;
            }
            let user = actor.user_id.clone();
            let teacher = actor.role == Role::Teacher;
            let summary = h
                .call(move |w| (teacher || w.state.group_of(&user).is_some()).then(|| w.state.summary()))
                .await?;
            out.extend(summary);
        }
        out.sort_by(|a, b| a.session_id.as_str().cmp(b.session_id.as_str()));
        Ok(out)
    }

    /// Runs a member command with lock housekeeping and the current time.
    async fn member_op<R, F>(&self, actor: &Principal, id: &SessionId, f: F) -> SessionResult<R>
    where
        R: Send + 'static,
        F: FnOnce(&mut Worker, &Principal, i64) -> SessionResult<R> + Send + 'static,
    {
        let actor = actor.clone();
        self.handle(id)?
            .call(move |w| {
                let now = w.now();
                w.state.housekeeping(Some(&actor.user_id), now);
                f(w, &actor, now)
            })
            .await?
    }

    pub async fn summary(&self, actor: &Principal, id: &SessionId) -> SessionResult<SessionSummary> {
        self.member_op(actor, id, |w, a, _| w.state.summary_for(a)).await
    }

    pub async fn join(&self, actor: &Principal, id: &SessionId) -> SessionResult<JoinOutcome> {
        self.member_op(actor, id, |w, a, now| w.state.join(a, now)).await
    }

    pub async fn leave(&self, actor: &Principal, id: &SessionId) -> SessionResult<()> {
        let user = actor.user_id.clone();
        self.handle(id)?.call(move |w| w.state.leave(&user)).await
    }

    pub async fn claim_lock(&self, actor: &Principal, id: &SessionId) -> SessionResult<LockOutcome> {
        self.member_op(actor, id, |w, a, now| w.state.claim_lock(a, now)).await
    }

    pub async fn release_lock(&self, actor: &Principal, id: &SessionId) -> SessionResult<()> {
        self.member_op(actor, id, |w, a, _| w.state.release_lock(a)).await
    }

    pub async fn export_to_group(&self, actor: &Principal, id: &SessionId, payload: String) -> SessionResult<u64> {
        self.member_op(actor, id, move |w, a, _| {
            let sink = w.sink.clone();
            w.state.export_to_group(a, &payload, sink.as_ref())
        })
        .await
    }

    pub async fn import_from_group(&self, actor: &Principal, id: &SessionId) -> SessionResult<Snapshot> {
        self.member_op(actor, id, |w, a, now| {
            let sink = w.sink.clone();
            w.state.import_from_group(a, now, sink.as_ref())
        })
        .await
    }

    pub async fn save_individual(&self, actor: &Principal, id: &SessionId, payload: String) -> SessionResult<()> {
        self.member_op(actor, id, move |w, a, _| {
            let sink = w.sink.clone();
            w.state.save_individual(a, &payload, sink.as_ref())
        })
        .await
    }

    pub async fn individual(&self, actor: &Principal, id: &SessionId) -> SessionResult<String> {
        self.member_op(actor, id, |w, a, _| w.state.individual(a)).await
    }

    /// Copies the group construction into the caller's scrapbook.
    pub async fn save_scrapbook(
        &self,
        actor: &Principal,
        id: &SessionId,
        title: Option<String>,
    ) -> SessionResult<ConstructionRecord> {
        let sid = id.clone();
        self.member_op(actor, id, move |w, a, _| {
            let payload = w.state.scrapbook_payload(a)?;
            let title = title.unwrap_or_else(|| format!("session {sid}"));
            Ok(w.accounts.save_scrapbook(&a.user_id, &title, &payload)?)
        })
        .await
    }

    pub async fn post_chat(
        &self,
        actor: &Principal,
        id: &SessionId,
        group: Option<GroupId>,
        text: String,
    ) -> SessionResult<ChatMessage> {
        self.member_op(actor, id, move |w, a, now| {
            let sink = w.sink.clone();
            w.state.post_chat(a, group.as_ref(), &text, now, sink.as_ref())
        })
        .await
    }

    pub async fn read_chat(
        &self,
        actor: &Principal,
        id: &SessionId,
        group: Option<GroupId>,
        after: Option<u64>,
    ) -> SessionResult<Vec<ChatMessage>> {
        self.member_op(actor, id, move |w, a, _| w.state.read_chat(a, group.as_ref(), after)).await
    }

    pub async fn current_snapshot(
        &self,
        actor: &Principal,
        id: &SessionId,
        group: Option<GroupId>,
        known_version: Option<u64>,
    ) -> SessionResult<Option<Snapshot>> {
        self.member_op(actor, id, move |w, a, now| {
            w.state.current_snapshot(a, group.as_ref(), known_version, now)
        })
        .await
    }

    /// Forces one sync step for a group outside the schedule.
    pub async fn sync_tick(&self, id: &SessionId, group: &GroupId) -> SessionResult<Option<Snapshot>> {
        let group = group.clone();
        self.handle(id)?
            .call(move |w| {
                let now = w.now();
                w.state.housekeeping(None, now);
                w.state.sync_tick(&group, now)
            })
            .await?
    }

    pub async fn observe(&self, actor: &Principal, id: &SessionId, group: &GroupId) -> SessionResult<Observation> {
        let group = group.clone();
        self.member_op(actor, id, move |w, a, now| w.state.observe(a, &group, now)).await
    }

    pub async fn close_session(&self, actor: &Principal, id: &SessionId) -> SessionResult<ClosedSession> {
        let closed = self
            .member_op(actor, id, |w, a, _| {
                let sink = w.sink.clone();
                w.state.close(a, sink.as_ref())
            })
            .await?;
        tracing::info!(session = %id, "session closed");
        Ok(closed)
    }

    pub async fn events(&self, actor: &Principal, id: &SessionId, after: u64) -> SessionResult<Vec<Envelope>> {
        self.member_op(actor, id, move |w, a, _| w.state.events(a, after)).await
    }

    /// Like [`events`](Self::events) but waits up to `timeout` for something
    /// to arrive when nothing is queued yet.
    pub async fn wait_events(
        &self,
        actor: &Principal,
        id: &SessionId,
        after: u64,
        timeout: Duration,
    ) -> SessionResult<Vec<Envelope>> {
        let mut changes = self.handle(id)?.subscribe();
        changes.borrow_and_update();
        let deadline = Instant::now() + timeout;
        loop {
            let batch = self.events(actor, id, after).await?;
            if !batch.is_empty() {
                return Ok(batch);
            }
            match tokio::time::timeout_at(deadline, changes.changed()).await {
                Ok(Ok(())) => continue,
                _ => return Ok(Vec::new()),
            }
        }
    }

    /// Catch-up batch for a reconnecting client and the seq to continue from.
    pub async fn resume(&self, actor: &Principal, id: &SessionId, after: u64) -> SessionResult<(Vec<Envelope>, u64)> {
        self.member_op(actor, id, move |w, a, _| w.state.resume(a, after)).await
    }

    /// Queues a direct reply in one member's mailbox.
    pub async fn reply(&self, id: &SessionId, user: &UserId, message: ServerMessage) -> SessionResult<()> {
        let user = user.clone();
        self.handle(id)?.call(move |w| w.state.reply(&user, message)).await
    }

    /// Highest envelope seq queued for `actor` so far.
    pub async fn last_seq(&self, actor: &Principal, id: &SessionId) -> SessionResult<u64> {
        let user = actor.user_id.clone();
        self.handle(id)?.call(move |w| w.state.last_seq(&user)).await
    }

    pub async fn audit(&self, id: &SessionId) -> SessionResult<Vec<AuditEntry>> {
        self.handle(id)?.call(|w| w.state.audit().cloned().collect()).await
    }

    pub async fn delivered_version(&self, id: &SessionId, user: &UserId, group: &GroupId) -> SessionResult<Option<u64>> {
        let (user, group) = (user.clone(), group.clone());
        self.handle(id)?.call(move |w| w.state.delivered_version(&user, &group)).await
    }

    pub async fn version(&self, id: &SessionId, group: &GroupId) -> SessionResult<Option<u64>> {
        let group = group.clone();
        self.handle(id)?.call(move |w| w.state.version(&group)).await
    }
}
