mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{classroom, midpoint_payload, open_accounts, payload_with_points, Classroom};
use geolab_core::accounts::{Accounts, Principal};
use geolab_core::ids::{ConstructionId, GroupId};
use geolab_core::session::{
    empty_payload, JoinOutcome, LockEvent, LockOutcome, ServerMessage, SessionConfig, SessionEngine, SessionError,
    SessionStatus, SessionSummary,
};
use geolab_core::{Clock, TokioClock};

struct Env {
    _dir: tempfile::TempDir,
    accounts: Arc<Accounts>,
    engine: Arc<SessionEngine>,
    room: Classroom,
}

fn env_with(config: SessionConfig, sizes: &[usize]) -> Env {
    let dir = tempfile::tempdir().unwrap();
    let clock: Arc<dyn Clock> = Arc::new(TokioClock::new(1_000_000));
    let accounts = Arc::new(open_accounts(dir.path(), clock.clone()));
    let room = classroom(&accounts, "c", sizes);
    let engine = SessionEngine::start(accounts.clone(), clock, config).unwrap();
    Env { _dir: dir, accounts, engine, room }
}

fn env() -> Env {
    env_with(SessionConfig::default(), &[2, 2])
}

async fn open(env: &Env) -> SessionSummary {
    env.engine.open_session(&env.room.teacher, &env.room.class_id, &[], None).await.unwrap()
}

fn gid(summary: &SessionSummary, student: &Principal) -> GroupId {
    summary
        .groups
        .iter()
        .find(|g| g.members.contains(&student.user_id))
        .unwrap()
        .group_id
        .clone()
}

#[tokio::test(start_paused = true)]
async fn open_session_checks_owner_groups_and_tasks() {
    let env = env();
    let student = env.room.student(0, 0).clone();
    let r = env.engine.open_session(&student, &env.room.class_id, &[], None).await;
    assert!(matches!(r, Err(SessionError::Forbidden)));

    let empty = env.accounts.create_class(&env.room.teacher, "empty").unwrap();
    let r = env.engine.open_session(&env.room.teacher, &empty.class_id, &[], None).await;
    assert!(matches!(r, Err(SessionError::NoGroupsDefined)));

    let r = env
        .engine
        .open_session(&env.room.teacher, &env.room.class_id, &[ConstructionId::from("k-missing")], None)
        .await;
    assert!(matches!(r, Err(SessionError::UnknownTask)));

    let task = env
        .accounts
        .create_construction(&env.room.teacher, "task", &midpoint_payload(), false)
        .unwrap();
    let s = env
        .engine
        .open_session(&env.room.teacher, &env.room.class_id, std::slice::from_ref(&task.construction_id), None)
        .await
        .unwrap();
    assert_eq!(s.status, SessionStatus::Open);
    assert_eq!(s.groups.len(), 2);
    assert!(s.groups.iter().all(|g| g.version == 0 && g.lock_holder.is_none()));
    assert_eq!(s.config.sync_interval_ms, 20_000);
    let joined = env.engine.join(&student, &s.session_id).await.unwrap();
    match joined {
        JoinOutcome::Member { snapshot, .. } => assert_eq!(snapshot.payload, task.payload),
        other => panic!("unexpected {other:?}"),
    }
}

#[tokio::test(start_paused = true)]
async fn join_roles() {
    let env = env();
    let s = open(&env).await;
    let student = env.room.student(1, 0).clone();
    match env.engine.join(&student, &s.session_id).await.unwrap() {
        JoinOutcome::Member { group_id, snapshot } => {
            assert_eq!(group_id, gid(&s, &student));
            assert_eq!(snapshot.version, 0);
            assert_eq!(snapshot.payload, empty_payload());
        }
        other => panic!("unexpected {other:?}"),
    }
    match env.engine.join(&env.room.teacher, &s.session_id).await.unwrap() {
        JoinOutcome::Observer { snapshots } => assert_eq!(snapshots.len(), 2),
        other => panic!("unexpected {other:?}"),
    }
    let anon = Principal::anonymous();
    assert!(matches!(env.engine.join(&anon, &s.session_id).await, Err(SessionError::Forbidden)));

    let other = classroom(&env.accounts, "x", &[1]);
    let r = env.engine.join(other.student(0, 0), &s.session_id).await;
    assert!(matches!(r, Err(SessionError::Forbidden)));
    let r = env.engine.join(&other.teacher, &s.session_id).await;
    assert!(matches!(r, Err(SessionError::Forbidden)));
}

#[tokio::test(start_paused = true)]
async fn lock_is_exclusive_and_guards_export() {
    let env = env();
    let s = open(&env).await;
    let sid = &s.session_id;
    let (a, b) = (env.room.student(0, 0).clone(), env.room.student(0, 1).clone());
    let c = env.room.student(1, 0).clone();

    assert_eq!(env.engine.claim_lock(&a, sid).await.unwrap(), LockOutcome::Granted);
    assert_eq!(env.engine.claim_lock(&a, sid).await.unwrap(), LockOutcome::Granted);
    assert_eq!(
        env.engine.claim_lock(&b, sid).await.unwrap(),
        LockOutcome::Held { holder: a.user_id.clone() }
    );
    // the other group has its own lock
    assert_eq!(env.engine.claim_lock(&c, sid).await.unwrap(), LockOutcome::Granted);

    let r = env.engine.export_to_group(&b, sid, midpoint_payload()).await;
    assert!(matches!(r, Err(SessionError::NotHolder)));
    let r = env.engine.export_to_group(&a, sid, "{\"format\":\"nope\"}".into()).await;
    assert!(matches!(r, Err(SessionError::ParseError(_))));
    assert_eq!(env.engine.export_to_group(&a, sid, midpoint_payload()).await.unwrap(), 1);
    assert_eq!(env.engine.export_to_group(&a, sid, payload_with_points(3)).await.unwrap(), 2);

    assert!(matches!(env.engine.release_lock(&b, sid).await, Err(SessionError::NotHolder)));
    env.engine.release_lock(&a, sid).await.unwrap();
    assert!(matches!(env.engine.release_lock(&a, sid).await, Err(SessionError::NotHolder)));
    assert_eq!(env.engine.claim_lock(&b, sid).await.unwrap(), LockOutcome::Granted);

    let teacher = &env.room.teacher;
    assert!(matches!(env.engine.claim_lock(teacher, sid).await, Err(SessionError::Forbidden)));
    let group = gid(&s, &a);
    assert_eq!(env.engine.version(sid, &group).await.unwrap(), Some(2));
}

#[tokio::test(start_paused = true)]
async fn sync_tick_pushes_only_changed_groups() {
    let env = env();
    let s = open(&env).await;
    let sid = &s.session_id;
    let a = env.room.student(0, 0).clone();
    let b = env.room.student(0, 1).clone();
    let c = env.room.student(1, 0).clone();
    for p in [&a, &b, &c, &env.room.teacher] {
        env.engine.join(p, sid).await.unwrap();
    }
    let g0 = gid(&s, &a);
    let g1 = gid(&s, &c);
    assert!(env.engine.sync_tick(sid, &g0).await.unwrap().is_none());

    env.engine.claim_lock(&a, sid).await.unwrap();
    env.engine.export_to_group(&a, sid, midpoint_payload()).await.unwrap();
    let snap = env.engine.sync_tick(sid, &g0).await.unwrap().unwrap();
    assert_eq!(snap.version, 1);
    assert_eq!(snap.payload, midpoint_payload());
    assert!(env.engine.sync_tick(sid, &g0).await.unwrap().is_none());
    assert!(env.engine.sync_tick(sid, &g1).await.unwrap().is_none());

    assert_eq!(env.engine.delivered_version(sid, &b.user_id, &g0).await.unwrap(), Some(1));
    assert_eq!(env.engine.delivered_version(sid, &env.room.teacher.user_id, &g0).await.unwrap(), Some(1));
    assert_eq!(env.engine.delivered_version(sid, &c.user_id, &g0).await.unwrap(), None);
    assert!(matches!(
        env.engine.sync_tick(sid, &GroupId::from("g-none")).await,
        Err(SessionError::UnknownGroup)
    ));
}

#[tokio::test(start_paused = true)]
async fn scheduler_delivers_within_one_interval() {
    let config = SessionConfig { sync_interval_ms: 200, lock_idle_timeout_ms: None };
    let env = env_with(config, &[2]);
    let s = open(&env).await;
    let sid = &s.session_id;
    let (a, b) = (env.room.student(0, 0).clone(), env.room.student(0, 1).clone());
    env.engine.join(&a, sid).await.unwrap();
    env.engine.join(&b, sid).await.unwrap();
    let g = gid(&s, &a);
    env.engine.claim_lock(&a, sid).await.unwrap();
    tokio::time::sleep(Duration::from_millis(50)).await;
    env.engine.export_to_group(&a, sid, midpoint_payload()).await.unwrap();
    assert_eq!(env.engine.delivered_version(sid, &b.user_id, &g).await.unwrap(), Some(0));
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert_eq!(env.engine.delivered_version(sid, &b.user_id, &g).await.unwrap(), Some(1));
}

#[tokio::test(start_paused = true)]
async fn chat_rules() {
    let env = env();
    let s = open(&env).await;
    let sid = &s.session_id;
    let a = env.room.student(0, 0).clone();
    let c = env.room.student(1, 0).clone();
    let g0 = gid(&s, &a);

    assert!(matches!(
        env.engine.post_chat(&a, sid, None, "  ".into()).await,
        Err(SessionError::EmptyMessage)
    ));
    assert!(matches!(
        env.engine.post_chat(&a, sid, None, "x".repeat(2001)).await,
        Err(SessionError::MessageTooLong)
    ));
    let m = env.engine.post_chat(&a, sid, None, "é".repeat(2000)).await.unwrap();
    assert_eq!(m.group_id, g0);
    let hello = env.engine.post_chat(&a, sid, None, "hello".into()).await.unwrap();
    assert!(hello.message_id > m.message_id);

    let history = env.engine.read_chat(&a, sid, None, None).await.unwrap();
    assert_eq!(history.len(), 2);
    let later = env.engine.read_chat(&a, sid, None, Some(m.message_id)).await.unwrap();
    assert_eq!(later, vec![hello]);
    assert!(matches!(
        env.engine.read_chat(&c, sid, Some(g0.clone()), None).await,
        Err(SessionError::Forbidden)
    ));
    assert!(env.engine.read_chat(&c, sid, None, None).await.unwrap().is_empty());

    let teacher = &env.room.teacher;
    assert!(matches!(
        env.engine.post_chat(teacher, sid, None, "hi".into()).await,
        Err(SessionError::UnknownGroup)
    ));
    env.engine.post_chat(teacher, sid, Some(g0.clone()), "hi".into()).await.unwrap();
    assert_eq!(env.engine.read_chat(teacher, sid, Some(g0), None).await.unwrap().len(), 3);
}

#[tokio::test(start_paused = true)]
async fn close_rejects_further_mutation() {
    let env = env();
    let s = open(&env).await;
    let sid = &s.session_id;
    let a = env.room.student(0, 0).clone();
    env.engine.join(&a, sid).await.unwrap();
    env.engine.claim_lock(&a, sid).await.unwrap();
    env.engine.export_to_group(&a, sid, midpoint_payload()).await.unwrap();
    env.engine.post_chat(&a, sid, None, "done".into()).await.unwrap();

    assert!(matches!(env.engine.close_session(&a, sid).await, Err(SessionError::Forbidden)));
    let closed = env.engine.close_session(&env.room.teacher, sid).await.unwrap();
    assert_eq!(closed.final_constructions[&gid(&s, &a)], midpoint_payload());
    assert_eq!(closed.chat_messages[&gid(&s, &a)], 1);
    assert!(matches!(
        env.engine.close_session(&env.room.teacher, sid).await,
        Err(SessionError::AlreadyClosed)
    ));
    assert!(matches!(
        env.engine.post_chat(&a, sid, None, "late".into()).await,
        Err(SessionError::SessionClosed)
    ));
    assert!(matches!(env.engine.claim_lock(&a, sid).await, Err(SessionError::SessionClosed)));
    assert!(matches!(
        env.engine.export_to_group(&a, sid, midpoint_payload()).await,
        Err(SessionError::SessionClosed)
    ));
    let events = env.engine.events(&a, sid, 0).await.unwrap();
    assert!(matches!(events.last().unwrap().message, ServerMessage::SessionClosed { .. }));
    let summary = env.engine.summary(&a, sid).await.unwrap();
    assert!(summary.groups.iter().all(|g| g.lock_holder.is_none()));
}

#[tokio::test(start_paused = true)]
async fn import_and_observe_individual_copies() {
    let env = env();
    let s = open(&env).await;
    let sid = &s.session_id;
    let (a, b) = (env.room.student(0, 0).clone(), env.room.student(0, 1).clone());
    env.engine.join(&b, sid).await.unwrap();
    env.engine.save_individual(&b, sid, payload_with_points(5)).await.unwrap();
    env.engine.claim_lock(&a, sid).await.unwrap();
    env.engine.export_to_group(&a, sid, midpoint_payload()).await.unwrap();

    let snap = env.engine.import_from_group(&b, sid).await.unwrap();
    assert_eq!(snap.version, 1);
    assert_eq!(env.engine.individual(&b, sid).await.unwrap(), midpoint_payload());

    let obs = env.engine.observe(&env.room.teacher, sid, &gid(&s, &a)).await.unwrap();
    assert_eq!(obs.snapshot.payload, midpoint_payload());
    assert_eq!(obs.individual[&b.user_id], midpoint_payload());
    assert_eq!(obs.lock_holder, Some(a.user_id.clone()));
    assert!(matches!(
        env.engine.observe(&a, sid, &gid(&s, &a)).await,
        Err(SessionError::Forbidden)
    ));
    assert!(matches!(
        env.engine.observe(&env.room.teacher, sid, &GroupId::from("g-x")).await,
        Err(SessionError::UnknownGroup)
    ));

    let saved = env.engine.save_scrapbook(&b, sid, Some("notes".into())).await.unwrap();
    assert_eq!(saved.payload, midpoint_payload());
    assert_eq!(env.accounts.scrapbook(&b).unwrap().len(), 1);
}

#[tokio::test(start_paused = true)]
async fn idle_lock_expires() {
    let config = SessionConfig { sync_interval_ms: 1_000, lock_idle_timeout_ms: Some(5_000) };
    let env = env_with(config, &[2]);
    let s = open(&env).await;
    let sid = &s.session_id;
    let (a, b) = (env.room.student(0, 0).clone(), env.room.student(0, 1).clone());
    env.engine.join(&b, sid).await.unwrap();
    env.engine.claim_lock(&a, sid).await.unwrap();
    tokio::time::sleep(Duration::from_millis(4_000)).await;
    env.engine.export_to_group(&a, sid, midpoint_payload()).await.unwrap();
    tokio::time::sleep(Duration::from_millis(4_000)).await;
    assert!(matches!(env.engine.claim_lock(&b, sid).await.unwrap(), LockOutcome::Held { .. }));
    tokio::time::sleep(Duration::from_millis(1_500)).await;
    assert_eq!(env.engine.claim_lock(&b, sid).await.unwrap(), LockOutcome::Granted);
    let events = env.engine.events(&b, sid, 0).await.unwrap();
    assert!(events.iter().any(|e| matches!(
        &e.message,
        ServerMessage::Lock(n) if n.event == LockEvent::Expired && n.by == a.user_id
    )));
}

#[tokio::test(start_paused = true)]
async fn resume_keeps_latest_snapshot_only() {
    let env = env();
    let s = open(&env).await;
    let sid = &s.session_id;
    let (a, b) = (env.room.student(0, 0).clone(), env.room.student(0, 1).clone());
    env.engine.join(&b, sid).await.unwrap();
    let g = gid(&s, &a);
    env.engine.claim_lock(&a, sid).await.unwrap();
    for n in 1..=3 {
        env.engine.export_to_group(&a, sid, payload_with_points(n)).await.unwrap();
        env.engine.sync_tick(sid, &g).await.unwrap();
    }
    env.engine.post_chat(&a, sid, None, "hi".into()).await.unwrap();
    let all = env.engine.events(&b, sid, 0).await.unwrap();
    let seqs: Vec<u64> = all.iter().map(|e| e.seq).collect();
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    let (resumed, high) = env.engine.resume(&b, sid, 0).await.unwrap();
    assert_eq!(high, *seqs.last().unwrap());
    let snaps: Vec<u64> = resumed
        .iter()
        .filter_map(|e| match &e.message {
            ServerMessage::Snapshot(s) => Some(s.version),
            _ => None,
        })
        .collect();
    assert_eq!(snaps, vec![3]);
    assert!(resumed.iter().any(|e| matches!(e.message, ServerMessage::Chat(_))));
    assert!(resumed.iter().any(|e| matches!(e.message, ServerMessage::Lock(_))));
}

#[tokio::test(start_paused = true)]
async fn wait_events_wakes_on_new_envelope() {
    let env = env();
    let s = open(&env).await;
    let sid = s.session_id.clone();
    let (a, b) = (env.room.student(0, 0).clone(), env.room.student(0, 1).clone());
    env.engine.join(&b, &sid).await.unwrap();
    let after = env.engine.events(&b, &sid, 0).await.unwrap().last().unwrap().seq;
    let empty = env.engine.wait_events(&b, &sid, after, Duration::from_millis(500)).await.unwrap();
    assert!(empty.is_empty());

    let engine = env.engine.clone();
    let sid2 = sid.clone();
    let waiter = tokio::spawn(async move { engine.wait_events(&b, &sid2, after, Duration::from_secs(30)).await });
    tokio::time::sleep(Duration::from_millis(100)).await;
    env.engine.post_chat(&a, &sid, None, "ping".into()).await.unwrap();
    let got = waiter.await.unwrap().unwrap();
    assert_eq!(got.len(), 1);
    assert!(matches!(&got[0].message, ServerMessage::Chat(m) if m.text == "ping"));
}

#[tokio::test(start_paused = true)]
async fn sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let clock: Arc<dyn Clock> = Arc::new(TokioClock::new(0));
    let (sid, g, a) = {
        let accounts = Arc::new(open_accounts(dir.path(), clock.clone()));
        let room = classroom(&accounts, "r", &[2]);
        let engine = SessionEngine::start(accounts.clone(), clock.clone(), SessionConfig::default()).unwrap();
        let s = engine.open_session(&room.teacher, &room.class_id, &[], None).await.unwrap();
        let a = room.student(0, 0).clone();
        engine.claim_lock(&a, &s.session_id).await.unwrap();
        engine.export_to_group(&a, &s.session_id, midpoint_payload()).await.unwrap();
        engine.post_chat(&a, &s.session_id, None, "saved".into()).await.unwrap();
        engine.shutdown().await;
        accounts.store().close();
        (s.session_id.clone(), s.groups[0].group_id.clone(), a)
    };
    let accounts = Arc::new(open_accounts(dir.path(), clock.clone()));
    let engine = SessionEngine::start(accounts, clock, SessionConfig::default()).unwrap();
    let summary = engine.summary(&a, &sid).await.unwrap();
    assert_eq!(summary.status, SessionStatus::Open);
    assert_eq!(summary.groups[0].version, 1);
    assert_eq!(summary.groups[0].lock_holder, None);
    let chat = engine.read_chat(&a, &sid, None, None).await.unwrap();
    assert_eq!(chat.len(), 1);
    let next = engine.post_chat(&a, &sid, None, "again".into()).await.unwrap();
    assert!(next.message_id > chat[0].message_id);
    match engine.join(&a, &sid).await.unwrap() {
        JoinOutcome::Member { snapshot, group_id } => {
            assert_eq!(group_id, g);
            assert_eq!(snapshot.payload, midpoint_payload());
        }
        other => panic!("unexpected {other:?}"),
    }
}
