mod common;

use std::sync::Arc;

use common::{classroom, open_accounts};
use geolab_core::accounts::{Accounts, Principal};
use geolab_core::ids::LogId;
use geolab_core::recorder::{
    export_jsonl, import_jsonl, reconstruct_at, replay_schedule, EventBody, GeometryAction, LogEvent, Recorder,
    RecorderError, SessionLog,
};
use geolab_core::{Clock, ManualClock};
use geolab_geometry::{evaluate, GeometryValue, StepId, StepKind};
use geolab_store::{FaultPlan, Store, StoreOptions};

fn add(ts: i64, kind: StepKind, inputs: &[u64], params: &[f64]) -> LogEvent {
    let inputs: Vec<StepId> = inputs.iter().map(|&i| StepId(i)).collect();
    LogEvent::geo(ts, GeometryAction::add(kind, &inputs, params))
}

fn point(ts: i64, x: f64, y: f64) -> LogEvent {
    add(ts, StepKind::FreePoint, &[], &[x, y])
}

struct Env {
    _dir: tempfile::TempDir,
    recorder: Recorder,
    student: Principal,
    teacher: Principal,
    admin: Principal,
    other_teacher: Principal,
}

fn env() -> Env {
    let dir = tempfile::tempdir().unwrap();
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(5_000));
    let accounts = Arc::new(open_accounts(dir.path(), clock));
    let room = classroom(&accounts, "a", &[1]);
    let other = classroom(&accounts, "b", &[1]);
    let recorder = Recorder::new(accounts.clone());
    Env {
        _dir: dir,
        student: room.student(0, 0).clone(),
        teacher: room.teacher,
        admin: room.admin,
        other_teacher: other.teacher,
        recorder,
    }
}

fn record(env: &Env, events: Vec<LogEvent>) -> SessionLog {
    let m = env.recorder.start_recording(&env.student, "task 1").unwrap();
    for e in events {
        env.recorder.append_event(&env.student, &m.log_id, e).unwrap();
    }
    env.recorder.finish_recording(&env.student, &m.log_id).unwrap()
}

#[test]
fn single_geometry_event() {
    let env = env();
    let log = record(&env, vec![point(10, 1.0, 2.0)]);
    assert!(log.manifest.finished);
    assert_eq!(log.events.len(), 1);
    assert!(log.events[0].is_geometry());
    assert_eq!(log.manifest.teacher_id, Some(env.teacher.user_id.clone()));
}

#[test]
fn append_validation() {
    let env = env();
    let m = env.recorder.start_recording(&env.student, "").unwrap();
    let id = &m.log_id;
    assert_eq!(env.recorder.append_event(&env.student, id, point(100, 0.0, 0.0)).unwrap(), 0);
    assert!(matches!(
        env.recorder.append_event(&env.student, id, point(99, 0.0, 0.0)),
        Err(RecorderError::TimestampRegression { last: 100, got: 99 })
    ));
    let remove = LogEvent::geo(100, GeometryAction::RemoveStep { id: StepId(99) });
    assert!(matches!(
        env.recorder.append_event(&env.student, id, remove),
        Err(RecorderError::InvalidEvent(_))
    ));
    let bad_nav = LogEvent {
        ts: 120,
        body: EventBody::Nav(geolab_core::recorder::NavigationEvent {
            page_id: "/x".into(),
            enter_ts: 120,
            exit_ts: Some(110),
        }),
    };
    assert!(matches!(
        env.recorder.append_event(&env.student, id, bad_nav),
        Err(RecorderError::InvalidEvent(_))
    ));
    assert!(matches!(
        env.recorder.append_event(&env.teacher, id, point(200, 0.0, 0.0)),
        Err(RecorderError::Forbidden)
    ));
    assert_eq!(env.recorder.append_event(&env.student, id, point(100, 1.0, 0.0)).unwrap(), 1);
    env.recorder.finish_recording(&env.student, id).unwrap();
    assert!(matches!(
        env.recorder.append_event(&env.student, id, point(300, 0.0, 0.0)),
        Err(RecorderError::LogFinished)
    ));
    assert!(matches!(
        env.recorder.finish_recording(&env.student, id),
        Err(RecorderError::LogFinished)
    ));
    assert!(matches!(
        env.recorder.append_event(&env.student, &LogId::from("l-none"), point(1, 0.0, 0.0)),
        Err(RecorderError::UnknownLog)
    ));
}

#[test]
fn replay_permissions() {
    let env = env();
    let log = record(&env, vec![point(1, 0.0, 0.0)]);
    let id = &log.manifest.log_id;
    let cursor = env.recorder.open_replay(&env.teacher, id).unwrap();
    assert_eq!(cursor.position(), 0);
    assert!(cursor.reconstructed().is_empty());
    for who in [&env.other_teacher, &env.student, &env.admin] {
        assert!(matches!(env.recorder.open_replay(who, id), Err(RecorderError::Forbidden)));
    }
    assert!(matches!(
        env.recorder.open_replay(&env.teacher, &LogId::from("l-missing")),
        Err(RecorderError::UnknownLog)
    ));

    let anon = Principal::anonymous();
    let m = env.recorder.start_recording(&anon, "").unwrap();
    assert_eq!(m.teacher_id, None);
    env.recorder.append_event(&anon, &m.log_id, point(1, 0.0, 0.0)).unwrap();
    for who in [&env.teacher, &env.other_teacher, &env.admin, &anon] {
        assert!(env.recorder.open_replay(who, &m.log_id).is_err());
    }
    assert!(matches!(
        env.recorder.start_recording(&env.teacher, ""),
        Err(RecorderError::Forbidden)
    ));
}

#[test]
fn stepping_through_a_log() {
    let env = env();
    let log = record(
        &env,
        vec![
            point(0, 0.0, 0.0),
            point(10, 4.0, 0.0),
            LogEvent::nav(20, "/help", Some(50)),
            add(30, StepKind::Midpoint, &[1, 2], &[]),
        ],
    );
    let mut cursor = env.recorder.open_replay(&env.teacher, &log.manifest.log_id).unwrap();
    cursor.step().unwrap();
    let two = cursor.step().unwrap();
    let before = cursor.reconstructed().clone();
    let nav = cursor.step().unwrap();
    assert_eq!(nav.position, 3);
    assert_eq!(cursor.reconstructed(), &before);
    assert_eq!(nav.evaluation, two.evaluation);
    let mid = cursor.step().unwrap();
    assert_eq!(mid.evaluation.get(StepId(3)), Some(&GeometryValue::Point { x: 2.0, y: 0.0 }));
    assert!(matches!(cursor.step(), Err(RecorderError::EndOfLog)));
    assert_eq!(cursor.position(), 4);
}

#[test]
fn schedule_examples() {
    let env = env();
    let log = record(&env, vec![point(0, 0.0, 0.0), point(1000, 1.0, 0.0), point(3000, 2.0, 0.0)]);
    let delays = |speed| -> Vec<u64> {
        replay_schedule(&log, speed).unwrap().iter().map(|e| e.delay_ms).collect()
    };
    assert_eq!(delays(1.0), vec![0, 1000, 2000]);
    assert_eq!(delays(2.0), vec![0, 500, 1000]);
    assert_eq!(delays(3.0), vec![0, 333, 667]);
    assert!(matches!(replay_schedule(&log, 0.0), Err(RecorderError::NonPositiveSpeed)));
    assert!(matches!(replay_schedule(&log, -1.0), Err(RecorderError::NonPositiveSpeed)));
    assert!(matches!(replay_schedule(&log, f64::NAN), Err(RecorderError::NonPositiveSpeed)));

    let m = env.recorder.start_recording(&env.student, "").unwrap();
    let open = env.recorder.load(&m.log_id).unwrap();
    assert!(matches!(replay_schedule(&open, 1.0), Err(RecorderError::UnfinishedLog)));
}

#[test]
fn reconstruct_bounds() {
    let env = env();
    let log = record(&env, vec![point(0, 0.0, 0.0), point(1, 2.0, 2.0), add(2, StepKind::Midpoint, &[1, 2], &[])]);
    let (c0, _) = reconstruct_at(&log, 0).unwrap();
    assert!(c0.is_empty());
    let (c2, _) = reconstruct_at(&log, 2).unwrap();
    assert_eq!(c2.len(), 2);
    let (c3, e3) = reconstruct_at(&log, 3).unwrap();
    assert_eq!(e3, evaluate(&c3));
    assert!(matches!(
        reconstruct_at(&log, 4),
        Err(RecorderError::IndexOutOfRange { index: 4, len: 3 })
    ));
}

#[test]
fn remove_cascades_in_replay() {
    let env = env();
    let log = record(
        &env,
        vec![
            point(0, 0.0, 0.0),
            point(1, 2.0, 0.0),
            add(2, StepKind::LineThroughPoints, &[1, 2], &[]),
            LogEvent::geo(3, GeometryAction::MoveFreePoint { id: StepId(2), x: 2.0, y: 2.0 }),
            LogEvent::geo(4, GeometryAction::RemoveStep { id: StepId(1) }),
        ],
    );
    let (c, _) = reconstruct_at(&log, 5).unwrap();
    assert_eq!(c.steps().iter().map(|s| s.id).collect::<Vec<_>>(), vec![StepId(2)]);
    assert_eq!(c.steps()[0].params, vec![2.0, 2.0]);
}

#[test]
fn jsonl_round_trip() {
    let env = env();
    let log = record(
        &env,
        vec![point(5, 0.5, -1.25), LogEvent::nav(6, "/tasks/1", None), add(7, StepKind::FreePoint, &[], &[1.0, 1.0])],
    );
    let text = export_jsonl(&log);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with(&format!(
        "{{\"format\":\"geolab-log\",\"version\":1,\"student\":\"{}\",\"started_ts\":5000",
        env.student.user_id
    )));
    assert_eq!(
        lines[1],
        r#"{"ts":5,"type":"geo","action":"add_step","kind":"FreePoint","inputs":[],"params":[0.5,-1.25]}"#
    );
    assert_eq!(lines[2], r#"{"ts":6,"type":"nav","page_id":"/tasks/1","enter_ts":6}"#);
    let back = import_jsonl(&text).unwrap();
    assert_eq!(back.events, log.events);
    assert_eq!(back.manifest.student_id, log.manifest.student_id);
    assert!(back.manifest.finished);

    let bad = text.replace("geolab-log", "other");
    assert!(matches!(import_jsonl(&bad), Err(RecorderError::Format(_))));
    let unordered = format!("{}\n{}\n{}\n", lines[0], lines[2], lines[1]);
    assert!(matches!(
        import_jsonl(&unordered),
        Err(RecorderError::TimestampRegression { .. })
    ));
}

#[test]
fn logs_survive_reopen_and_sealing() {
    let dir = tempfile::tempdir().unwrap();
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(0));
    let (student, teacher, id) = {
        let accounts = Arc::new(open_accounts(dir.path(), clock.clone()));
        let room = classroom(&accounts, "p", &[1]);
        let recorder = Recorder::new(accounts.clone());
        let s = room.student(0, 0).clone();
        let m = recorder.start_recording(&s, "").unwrap();
        for i in 0..3 {
            recorder.append_event(&s, &m.log_id, point(i * 10, i as f64, 0.0)).unwrap();
        }
        accounts.store().close();
        (s, room.teacher, m.log_id)
    };
    let accounts = Arc::new(open_accounts(dir.path(), clock.clone()));
    let recorder = Recorder::new(accounts.clone());
    assert!(matches!(
        recorder.append_event(&student, &id, point(5, 0.0, 0.0)),
        Err(RecorderError::TimestampRegression { last: 20, .. })
    ));
    assert_eq!(recorder.append_event(&student, &id, point(30, 9.0, 0.0)).unwrap(), 3);
    assert_eq!(recorder.seal_open_logs().unwrap(), 1);
    assert!(matches!(
        recorder.append_event(&student, &id, point(40, 0.0, 0.0)),
        Err(RecorderError::LogFinished)
    ));
    accounts.store().close();

    let accounts = Arc::new(open_accounts(dir.path(), clock));
    let recorder = Recorder::new(accounts);
    let log = recorder.get_log(&teacher, &id).unwrap();
    assert_eq!(log.events.len(), 4);
    assert!(log.manifest.sealed && !log.manifest.finished);
    let listed = recorder.list_logs(&teacher, Some(&student.user_id)).unwrap();
    assert_eq!(listed.len(), 1);
    assert_eq!(listed[0].event_count, 4);
    assert!(matches!(recorder.list_logs(&student, None), Err(RecorderError::Forbidden)));
}

#[test]
fn crash_keeps_exactly_the_acknowledged_prefix() {
    for fail_at in 0..12 {
        let dir = tempfile::tempdir().unwrap();
        let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(0));
        let (student, teacher, id) = {
            let accounts = Arc::new(open_accounts(dir.path(), clock.clone()));
            let room = classroom(&accounts, "q", &[1]);
            let s = room.student(0, 0).clone();
            let m = Recorder::new(accounts.clone()).start_recording(&s, "").unwrap();
            accounts.store().close();
            (s, room.teacher, m.log_id)
        };
        let store = Store::open_with(
            dir.path(),
            StoreOptions { sync: false, faults: Some(FaultPlan::fail_at(fail_at)) },
        )
        .unwrap();
        let accounts = Arc::new(Accounts::new(store, clock.clone(), Default::default()));
        let recorder = Recorder::new(accounts.clone());
        let mut acked = 0;
        for i in 0..10 {
            match recorder.append_event(&student, &id, point(i, i as f64, 0.0)) {
                Ok(_) => acked += 1,
                Err(_) => break,
            }
        }
        drop(recorder);
        drop(accounts);
        let accounts = Arc::new(open_accounts(dir.path(), clock));
        let log = Recorder::new(accounts).get_log(&teacher, &id).unwrap();
        assert_eq!(log.events.len(), acked, "fail_at {fail_at}");
        assert_eq!(reconstruct_at(&log, acked).unwrap().0.len(), acked);
        if fail_at < 10 {
            assert!(acked < 10, "fault at {fail_at} never fired");
        }
    }
}
