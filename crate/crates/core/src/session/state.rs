use std::collections::{BTreeMap, BTreeSet, VecDeque};

use geolab_geometry::{parse_construction, serialize_construction, Construction};

use super::model::*;
use crate::accounts::{authorize, ActionKind, Principal, Resource, Role, WorkGroup};
use crate::ids::{ClassId, ConstructionId, GroupId, SessionId, UserId};

/// Oldest envelopes are dropped once a mailbox holds this many.
pub const MAILBOX_CAPACITY: usize = 10_000;
const AUDIT_CAPACITY: usize = 200_000;

/// Durable side effects of session commands.
pub trait SessionSink: Send + Sync {
    fn save_session(&self, record: &SessionRecord) -> Result<(), SessionError>;
    fn append_chat(&self, session: &SessionId, message: &ChatMessage) -> Result<(), SessionError>;
}

/// Sink that persists nothing.
pub struct NullSink;

impl SessionSink for NullSink {
    fn save_session(&self, _: &SessionRecord) -> Result<(), SessionError> {
        Ok(())
    }
    fn append_chat(&self, _: &SessionId, _: &ChatMessage) -> Result<(), SessionError> {
        Ok(())
    }
}

fn to_text(c: &Construction) -> String {
    String::from_utf8(serialize_construction(c)).expect("canonical form is UTF-8")
}

pub fn empty_payload() -> String {
    to_text(&Construction::default())
}

fn canonicalize(payload: &str) -> Result<String, SessionError> {
    parse_construction(payload.as_bytes())
        .map(|c| to_text(&c))
        .map_err(|e| SessionError::ParseError(e.to_string()))
}

#[derive(Debug, Clone)]
struct Group {
    id: GroupId,
    members: BTreeSet<UserId>,
    payload: String,
    version: u64,
    holder: Option<UserId>,
    holder_seen_ms: i64,
    last_tick_version: u64,
    chat: Vec<ChatMessage>,
    individual: BTreeMap<UserId, String>,
}

impl Group {
    fn snapshot(&self, now: i64) -> Snapshot {
        Snapshot {
            group_id: self.id.clone(),
            version: self.version,
            payload: self.payload.clone(),
            produced_ts: now,
        }
    }
}

#[derive(Debug, Default)]
struct Mailbox {
    last_seq: u64,
    entries: VecDeque<Envelope>,
    /// Newest snapshot version queued per group.
    delivered: BTreeMap<GroupId, u64>,
}

impl Mailbox {
    fn push(&mut self, message: ServerMessage) {
        if let ServerMessage::Snapshot(s) = &message {
            self.delivered.insert(s.group_id.clone(), s.version);
        }
        self.last_seq += 1;
        self.entries.push_back(Envelope { seq: self.last_seq, message });
        if self.entries.len() > MAILBOX_CAPACITY {
            self.entries.pop_front();
        }
    }

    fn after(&self, seq: u64) -> impl Iterator<Item = &Envelope> {
        // seqs are contiguous, so skip directly past the ones already seen
        let first = self.entries.front().map_or(0, |e| e.seq);
        let skip = (seq + 1).saturating_sub(first) as usize;
        self.entries.iter().skip(skip)
    }
}

/// State of one collaborative session. Every method is one command; the
/// caller is responsible for running commands one at a time.
pub struct SessionState {
    id: SessionId,
    teacher_id: UserId,
    class_id: ClassId,
    tasks: Vec<ConstructionId>,
    config: SessionConfig,
    status: SessionStatus,
    groups: BTreeMap<GroupId, Group>,
    /// Joined users; `None` marks the teacher observing every group.
    attached: BTreeMap<UserId, Option<GroupId>>,
    mailboxes: BTreeMap<UserId, Mailbox>,
    audit: VecDeque<AuditEntry>,
    next_message_id: u64,
    /// Total envelopes ever queued, across all mailboxes.
    queued: u64,
}

pub struct OpenParams {
    pub id: SessionId,
    pub teacher_id: UserId,
    pub class_id: ClassId,
    pub tasks: Vec<ConstructionId>,
    pub config: SessionConfig,
    pub groups: Vec<WorkGroup>,
    /// Canonical text every group workspace starts from.
    pub initial_payload: String,
}

impl SessionState {
    pub fn open(params: OpenParams) -> Result<Self, SessionError> {
        if params.groups.is_empty() {
            return Err(SessionError::NoGroupsDefined);
        }
        validate_config(&params.config)?;
        let groups = params
            .groups
            .into_iter()
            .map(|g| {
                let group = Group {
                    id: g.group_id.clone(),
                    members: g.member_student_ids,
                    payload: params.initial_payload.clone(),
                    version: 0,
                    holder: None,
                    holder_seen_ms: 0,
                    last_tick_version: 0,
                    chat: Vec::new(),
                    individual: BTreeMap::new(),
                };
                (g.group_id, group)
            })
            .collect();
        Ok(SessionState {
            id: params.id,
            teacher_id: params.teacher_id,
            class_id: params.class_id,
            tasks: params.tasks,
            config: params.config,
            status: SessionStatus::Open,
            groups,
            attached: BTreeMap::new(),
            mailboxes: BTreeMap::new(),
            audit: VecDeque::new(),
            next_message_id: 1,
            queued: 0,
        })
    }

    /// Rebuilds a session after a restart. Locks start unheld and nobody is
    /// attached.
    pub fn restore(record: SessionRecord, chats: Vec<ChatMessage>) -> Self {
        let mut groups: BTreeMap<GroupId, Group> = record
            .groups
            .into_iter()
            .map(|g| {
                let group = Group {
                    id: g.group_id.clone(),
                    members: g.members.into_iter().collect(),
                    payload: g.construction,
                    version: g.version,
                    holder: None,
                    holder_seen_ms: 0,
                    last_tick_version: g.version,
                    chat: Vec::new(),
                    individual: g.individual,
                };
                (g.group_id, group)
            })
            .collect();
        let mut next_message_id = 1;
        for message in chats {
            next_message_id = next_message_id.max(message.message_id + 1);
            if let Some(g) = groups.get_mut(&message.group_id) {
                g.chat.push(message);
            }
        }
        SessionState {
            id: record.session_id,
            teacher_id: record.teacher_id,
            class_id: record.class_id,
            tasks: record.task_constructions,
            config: record.config,
            status: record.status,
            groups,
            attached: BTreeMap::new(),
            mailboxes: BTreeMap::new(),
            audit: VecDeque::new(),
            next_message_id,
            queued: 0,
        }
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn teacher_id(&self) -> &UserId {
        &self.teacher_id
    }

    pub fn config(&self) -> SessionConfig {
        self.config
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn is_open(&self) -> bool {
        self.status == SessionStatus::Open
    }

    pub fn group_ids(&self) -> Vec<GroupId> {
        self.groups.keys().cloned().collect()
    }

    pub fn group_of(&self, user: &UserId) -> Option<&GroupId> {
        self.groups.values().find(|g| g.members.contains(user)).map(|g| &g.id)
    }

    pub fn version(&self, group: &GroupId) -> Option<u64> {
        self.groups.get(group).map(|g| g.version)
    }

    pub fn lock_holder(&self, group: &GroupId) -> Option<&UserId> {
        self.groups.get(group).and_then(|g| g.holder.as_ref())
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.id.clone(),
            teacher_id: self.teacher_id.clone(),
            class_id: self.class_id.clone(),
            task_constructions: self.tasks.clone(),
            config: self.config,
            status: self.status,
            groups: self
                .groups
                .values()
                .map(|g| GroupSummary {
                    group_id: g.id.clone(),
                    members: g.members.iter().cloned().collect(),
                    version: g.version,
                    lock_holder: g.holder.clone(),
                })
                .collect(),
        }
    }

    /// Summary visible to members and the owning teacher.
    pub fn summary_for(&self, actor: &Principal) -> Result<SessionSummary, SessionError> {
        self.may_listen(actor)?;
        Ok(self.summary())
    }

    pub fn record(&self) -> SessionRecord {
        SessionRecord {
            session_id: self.id.clone(),
            teacher_id: self.teacher_id.clone(),
            class_id: self.class_id.clone(),
            task_constructions: self.tasks.clone(),
            config: self.config,
            status: self.status,
            groups: self
                .groups
                .values()
                .map(|g| GroupRecord {
                    group_id: g.id.clone(),
                    members: g.members.iter().cloned().collect(),
                    construction: g.payload.clone(),
                    version: g.version,
                    individual: g.individual.clone(),
                })
                .collect(),
        }
    }

    pub fn audit(&self) -> impl Iterator<Item = &AuditEntry> {
        self.audit.iter()
    }

    pub fn take_audit(&mut self) -> Vec<AuditEntry> {
        self.audit.drain(..).collect()
    }

    fn resource(&self, actor: &Principal) -> Resource {
        Resource::Session {
            teacher: self.teacher_id.clone(),
            in_group: self.group_of(&actor.user_id).is_some(),
        }
    }

    fn check(&self, actor: &Principal, action: ActionKind) -> Result<(), SessionError> {
        if authorize(actor, action, &self.resource(actor)).is_allow() {
            Ok(())
        } else {
            Err(SessionError::Forbidden)
        }
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        if self.is_open() {
            Ok(())
        } else {
            Err(SessionError::SessionClosed)
        }
    }

    /// Group addressed by a member-level action. Students act on their own
    /// group; the teacher must name one.
    fn target_group(&self, actor: &Principal, requested: Option<&GroupId>) -> Result<GroupId, SessionError> {
        if actor.role == Role::Teacher && actor.user_id == self.teacher_id {
            let g = requested.ok_or(SessionError::UnknownGroup)?;
            if !self.groups.contains_key(g) {
                return Err(SessionError::UnknownGroup);
            }
            return Ok(g.clone());
        }
        let own = self.group_of(&actor.user_id).ok_or(SessionError::Forbidden)?;
        match requested {
            Some(g) if g != own => Err(SessionError::Forbidden),
            _ => Ok(own.clone()),
        }
    }

    /// Group of a student acting on its own workspace.
    fn own_group(&self, actor: &Principal) -> Result<GroupId, SessionError> {
        self.group_of(&actor.user_id).cloned().ok_or(SessionError::Forbidden)
    }

    fn push(&mut self, user: &UserId, message: ServerMessage) {
        if let Some(mb) = self.mailboxes.get_mut(user) {
            mb.push(message);
            self.queued += 1;
        }
    }

    /// Queues a message for everyone attached to `group`, including the
    /// observing teacher.
    fn deliver(&mut self, group: &GroupId, message: ServerMessage) {
        for user in self.recipients(group) {
            self.push(&user, message.clone());
        }
    }

    fn recipients(&self, group: &GroupId) -> Vec<UserId> {
        self.attached
            .iter()
            .filter(|(_, g)| g.as_ref().is_none_or(|g| g == group))
            .map(|(u, _)| u.clone())
            .collect()
    }

    fn record_audit(&mut self, entry: AuditEntry) {
        self.audit.push_back(entry);
        if self.audit.len() > AUDIT_CAPACITY {
            self.audit.pop_front();
        }
    }

    /// Drops locks whose holder has been idle past the configured timeout,
    /// then refreshes the activity timer of `actor` if it holds a lock.
    pub fn housekeeping(&mut self, actor: Option<&UserId>, now: i64) {
        if let Some(timeout) = self.config.lock_idle_timeout_ms {
            let expired: Vec<(GroupId, UserId, u64)> = self
                .groups
                .values()
                .filter_map(|g| {
                    let h = g.holder.as_ref()?;
                    (now - g.holder_seen_ms >= timeout as i64).then(|| (g.id.clone(), h.clone(), g.version))
                })
                .collect();
            for (gid, holder, version) in expired {
                self.groups.get_mut(&gid).expect("group exists").holder = None;
                self.record_audit(AuditEntry {
                    group_id: gid.clone(),
                    actor: holder.clone(),
                    action: AuditAction::Expire,
                    holder_before: Some(holder.clone()),
                    holder_after: None,
                    version_before: version,
                    version_after: version,
                    ok: true,
                });
                self.deliver(
                    &gid,
                    ServerMessage::Lock(LockNotice {
                        group_id: gid.clone(),
                        event: LockEvent::Expired,
                        holder: None,
                        by: holder,
                    }),
                );
            }
        }
        if let Some(user) = actor {
            if let Some(g) = self.groups.values_mut().find(|g| g.holder.as_ref() == Some(user)) {
                g.holder_seen_ms = now;
            }
        }
    }

    pub fn join(&mut self, actor: &Principal, now: i64) -> Result<JoinOutcome, SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::JoinCollabSession)?;
        let user = actor.user_id.clone();
        self.mailboxes.entry(user.clone()).or_default();
        if let Some(gid) = self.group_of(&user).cloned() {
            self.attached.insert(user.clone(), Some(gid.clone()));
            let group = self.groups.get_mut(&gid).expect("group exists");
            group.individual.entry(user.clone()).or_insert_with(empty_payload);
            let snapshot = group.snapshot(now);
            self.push(&user, ServerMessage::Snapshot(snapshot.clone()));
            Ok(JoinOutcome::Member { group_id: gid, snapshot })
        } else {
            self.attached.insert(user.clone(), None);
            let snapshots: Vec<Snapshot> = self.groups.values().map(|g| g.snapshot(now)).collect();
            for s in &snapshots {
                self.push(&user, ServerMessage::Snapshot(s.clone()));
            }
            Ok(JoinOutcome::Observer { snapshots })
        }
    }

    /// Detaches a member; its mailbox is kept so a later resume can catch up.
    pub fn leave(&mut self, user: &UserId) {
        self.attached.remove(user);
    }

    pub fn claim_lock(&mut self, actor: &Principal, now: i64) -> Result<LockOutcome, SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::ClaimLock)?;
        let gid = self.own_group(actor)?;
        let group = self.groups.get_mut(&gid).expect("group exists");
        let before = group.holder.clone();
        let outcome = match &group.holder {
            None => {
                group.holder = Some(actor.user_id.clone());
                group.holder_seen_ms = now;
                LockOutcome::Granted
            }
            Some(h) if *h == actor.user_id => LockOutcome::Granted,
            Some(h) => LockOutcome::Held { holder: h.clone() },
        };
        let version = group.version;
        let after = group.holder.clone();
        self.record_audit(AuditEntry {
            group_id: gid.clone(),
            actor: actor.user_id.clone(),
            action: AuditAction::Claim,
            holder_before: before.clone(),
            holder_after: after,
            version_before: version,
            version_after: version,
            ok: outcome == LockOutcome::Granted,
        });
        if before.is_none() {
            self.deliver(
                &gid,
                ServerMessage::Lock(LockNotice {
                    group_id: gid.clone(),
                    event: LockEvent::Granted,
                    holder: Some(actor.user_id.clone()),
                    by: actor.user_id.clone(),
                }),
            );
        }
        Ok(outcome)
    }

    pub fn release_lock(&mut self, actor: &Principal) -> Result<(), SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::ReleaseLock)?;
        let gid = self.own_group(actor)?;
        let group = self.groups.get_mut(&gid).expect("group exists");
        let before = group.holder.clone();
        let ok = before.as_ref() == Some(&actor.user_id);
        if ok {
            group.holder = None;
        }
        let version = group.version;
        self.record_audit(AuditEntry {
            group_id: gid.clone(),
            actor: actor.user_id.clone(),
            action: AuditAction::Release,
            holder_before: before.clone(),
            holder_after: if ok { None } else { before },
            version_before: version,
            version_after: version,
            ok,
        });
        if !ok {
            return Err(SessionError::NotHolder);
        }
        self.deliver(
            &gid,
            ServerMessage::Lock(LockNotice {
                group_id: gid.clone(),
                event: LockEvent::Released,
                holder: None,
                by: actor.user_id.clone(),
            }),
        );
        Ok(())
    }

    /// Replaces the group construction. Only the lock holder may do this.
    pub fn export_to_group(
        &mut self,
        actor: &Principal,
        payload: &str,
        sink: &dyn SessionSink,
    ) -> Result<u64, SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::ExportToGroup)?;
        let gid = self.own_group(actor)?;
        let group = &self.groups[&gid];
        let holder = group.holder.clone();
        let version = group.version;
        let mut entry = AuditEntry {
            group_id: gid.clone(),
            actor: actor.user_id.clone(),
            action: AuditAction::Export,
            holder_before: holder.clone(),
            holder_after: holder.clone(),
            version_before: version,
            version_after: version,
            ok: false,
        };
        if holder.as_ref() != Some(&actor.user_id) {
            self.record_audit(entry);
            return Err(SessionError::NotHolder);
        }
        let canonical = match canonicalize(payload) {
            Ok(c) => c,
            Err(e) => {
                self.record_audit(entry);
                return Err(e);
            }
        };
        let group = self.groups.get_mut(&gid).expect("group exists");
        let old = std::mem::replace(&mut group.payload, canonical);
        group.version += 1;
        let new_version = group.version;
        if let Err(e) = sink.save_session(&self.record()) {
            let group = self.groups.get_mut(&gid).expect("group exists");
            group.payload = old;
            group.version -= 1;
            self.record_audit(entry);
            return Err(e);
        }
        entry.version_after = new_version;
        entry.ok = true;
        self.record_audit(entry);
        Ok(new_version)
    }

    /// Overwrites the caller's individual copy with the group construction.
    pub fn import_from_group(
        &mut self,
        actor: &Principal,
        now: i64,
        sink: &dyn SessionSink,
    ) -> Result<Snapshot, SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::ImportFromGroup)?;
        let gid = self.own_group(actor)?;
        let group = &self.groups[&gid];
        let snapshot = group.snapshot(now);
        self.set_individual(&gid, &actor.user_id, snapshot.payload.clone(), sink)?;
        Ok(snapshot)
    }

    pub fn save_individual(
        &mut self,
        actor: &Principal,
        payload: &str,
        sink: &dyn SessionSink,
    ) -> Result<(), SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::SaveIndividual)?;
        let gid = self.own_group(actor)?;
        let canonical = canonicalize(payload)?;
        self.set_individual(&gid, &actor.user_id, canonical, sink)
    }

    fn set_individual(
        &mut self,
        gid: &GroupId,
        user: &UserId,
        payload: String,
        sink: &dyn SessionSink,
    ) -> Result<(), SessionError> {
        let group = self.groups.get_mut(gid).expect("group exists");
        let old = group.individual.insert(user.clone(), payload);
        if let Err(e) = sink.save_session(&self.record()) {
            let group = self.groups.get_mut(gid).expect("group exists");
            match old {
                Some(p) => group.individual.insert(user.clone(), p),
                None => group.individual.remove(user),
            };
            return Err(e);
        }
        Ok(())
    }

    /// The caller's individual copy.
    pub fn individual(&self, actor: &Principal) -> Result<String, SessionError> {
        self.check(actor, ActionKind::SaveIndividual)?;
        let gid = self.own_group(actor)?;
        Ok(self.groups[&gid].individual.get(&actor.user_id).cloned().unwrap_or_else(empty_payload))
    }

    /// Group construction to copy into the caller's scrapbook.
    pub fn scrapbook_payload(&self, actor: &Principal) -> Result<String, SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::SaveScrapbook)?;
        let gid = self.own_group(actor)?;
        Ok(self.groups[&gid].payload.clone())
    }

    pub fn post_chat(
        &mut self,
        actor: &Principal,
        group: Option<&GroupId>,
        text: &str,
        now: i64,
        sink: &dyn SessionSink,
    ) -> Result<ChatMessage, SessionError> {
        self.ensure_open()?;
        self.check(actor, ActionKind::PostChat)?;
        let gid = self.target_group(actor, group)?;
        if text.trim().is_empty() {
            return Err(SessionError::EmptyMessage);
        }
        if text.chars().count() > MAX_CHAT_CHARS {
            return Err(SessionError::MessageTooLong);
        }
        let message = ChatMessage {
            message_id: self.next_message_id,
            group_id: gid.clone(),
            author_id: actor.user_id.clone(),
            ts: now,
            text: text.to_string(),
        };
        sink.append_chat(&self.id, &message)?;
        self.next_message_id += 1;
        self.groups.get_mut(&gid).expect("group exists").chat.push(message.clone());
        self.deliver(&gid, ServerMessage::Chat(message.clone()));
        Ok(message)
    }

    /// Chat history of a group, optionally only messages after `after`.
    pub fn read_chat(
        &self,
        actor: &Principal,
        group: Option<&GroupId>,
        after: Option<u64>,
    ) -> Result<Vec<ChatMessage>, SessionError> {
        self.check(actor, ActionKind::ReadChat)?;
        let gid = self.target_group(actor, group)?;
        let after = after.unwrap_or(0);
        Ok(self.groups[&gid].chat.iter().filter(|m| m.message_id > after).cloned().collect())
    }

    /// Pushes the group snapshot to attached members if the version moved
    /// since the previous tick.
    pub fn sync_tick(&mut self, group: &GroupId, now: i64) -> Result<Option<Snapshot>, SessionError> {
        self.ensure_open()?;
        let g = self.groups.get_mut(group).ok_or(SessionError::UnknownGroup)?;
        if g.version == g.last_tick_version {
            return Ok(None);
        }
        g.last_tick_version = g.version;
        let snapshot = g.snapshot(now);
        let stale: Vec<UserId> = self
            .recipients(group)
            .into_iter()
            .filter(|u| self.delivered_version(u, group) != Some(snapshot.version))
            .collect();
        for user in stale {
            self.push(&user, ServerMessage::Snapshot(snapshot.clone()));
        }
        Ok(Some(snapshot))
    }

    /// One scheduler tick over every group. Returns the number of groups
    /// whose snapshot was pushed.
    pub fn tick_all(&mut self, now: i64) -> Result<usize, SessionError> {
        self.ensure_open()?;
        self.housekeeping(None, now);
        let mut pushed = 0;
        for gid in self.group_ids() {
            if self.sync_tick(&gid, now)?.is_some() {
                pushed += 1;
            }
        }
        Ok(pushed)
    }

    /// Current snapshot of a group, or `None` when the caller already has
    /// `known_version`.
    pub fn current_snapshot(
        &self,
        actor: &Principal,
        group: Option<&GroupId>,
        known_version: Option<u64>,
        now: i64,
    ) -> Result<Option<Snapshot>, SessionError> {
        self.check(actor, ActionKind::ReadChat)?;
        let gid = self.target_group(actor, group)?;
        let g = &self.groups[&gid];
        Ok((known_version != Some(g.version)).then(|| g.snapshot(now)))
    }

    pub fn observe(&self, actor: &Principal, group: &GroupId, now: i64) -> Result<Observation, SessionError> {
        self.check(actor, ActionKind::ObserveGroup)?;
        let g = self.groups.get(group).ok_or(SessionError::UnknownGroup)?;
        Ok(Observation {
            snapshot: g.snapshot(now),
            individual: g.individual.clone(),
            members: g.members.iter().cloned().collect(),
            lock_holder: g.holder.clone(),
        })
    }

    pub fn close(&mut self, actor: &Principal, sink: &dyn SessionSink) -> Result<ClosedSession, SessionError> {
        self.check(actor, ActionKind::CloseSession)?;
        if !self.is_open() {
            return Err(SessionError::AlreadyClosed);
        }
        self.status = SessionStatus::Closed;
        if let Err(e) = sink.save_session(&self.record()) {
            self.status = SessionStatus::Open;
            return Err(e);
        }
        for g in self.groups.values_mut() {
            g.holder = None;
        }
        let users: Vec<UserId> = self.attached.keys().cloned().collect();
        for u in users {
            self.push(&u, ServerMessage::SessionClosed { session_id: self.id.clone() });
        }
        Ok(ClosedSession {
            session_id: self.id.clone(),
            final_constructions: self.groups.values().map(|g| (g.id.clone(), g.payload.clone())).collect(),
            chat_messages: self.groups.values().map(|g| (g.id.clone(), g.chat.len())).collect(),
        })
    }

    fn may_listen(&self, actor: &Principal) -> Result<(), SessionError> {
        self.check(actor, ActionKind::ReadChat)
    }

    /// Every queued envelope with `seq > after`.
    pub fn events(&self, actor: &Principal, after: u64) -> Result<Vec<Envelope>, SessionError> {
        self.may_listen(actor)?;
        Ok(self
            .mailboxes
            .get(&actor.user_id)
            .map(|mb| mb.after(after).cloned().collect())
            .unwrap_or_default())
    }

    /// Envelopes a reconnecting client needs: chat, lock and close notices
    /// after `after`, plus only the newest snapshot per group. Also returns
    /// the highest seq queued so far, from which live delivery continues.
    pub fn resume(&self, actor: &Principal, after: u64) -> Result<(Vec<Envelope>, u64), SessionError> {
        let all = self.events(actor, after)?;
        let high = all.last().map_or(after, |e| e.seq);
        let mut latest: BTreeMap<GroupId, u64> = BTreeMap::new();
        for e in &all {
            if let ServerMessage::Snapshot(s) = &e.message {
                latest.insert(s.group_id.clone(), e.seq);
            }
        }
        let kept = all
            .into_iter()
            .filter(|e| match &e.message {
                ServerMessage::Snapshot(s) => latest.get(&s.group_id) == Some(&e.seq),
                m => m.replayable(),
            })
            .collect();
        Ok((kept, high))
    }

    /// Queues a direct reply (ack, error, pong) to one member.
    pub fn reply(&mut self, user: &UserId, message: ServerMessage) {
        self.push(user, message);
    }

    pub fn queued(&self) -> u64 {
        self.queued
    }

    pub fn last_seq(&self, user: &UserId) -> u64 {
        self.mailboxes.get(user).map_or(0, |mb| mb.last_seq)
    }

    /// Version of the newest snapshot queued to `user` for `group`.
    pub fn delivered_version(&self, user: &UserId, group: &GroupId) -> Option<u64> {
        self.mailboxes.get(user)?.delivered.get(group).copied()
    }
}

pub fn validate_config(config: &SessionConfig) -> Result<(), SessionError> {
    if config.sync_interval_ms == 0 {
        return Err(SessionError::InvalidConfig("sync interval must be positive".into()));
    }
    if config.lock_idle_timeout_ms == Some(0) {
        return Err(SessionError::InvalidConfig("lock timeout must be positive".into()));
    }
    Ok(())
}
