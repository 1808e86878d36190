//! Random stand-alone work sessions, generated through the kernel so every
//! action is valid at the point it happens.

use geolab_geometry::{Construction, StepId, StepKind};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::gen::{coord, random_step};

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Add { kind: StepKind, inputs: Vec<StepId>, params: Vec<f64> },
    Remove(StepId),
    Move { id: StepId, x: f64, y: f64 },
    Nav { page: String, exit_after_ms: Option<i64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedAction {
    pub ts: i64,
    pub action: Action,
}

#[derive(Debug, Clone)]
pub struct ScriptedSession {
    pub started_ts: i64,
    pub actions: Vec<TimedAction>,
    /// Construction after applying every action with the kernel.
    pub final_construction: Construction,
}

const PAGES: [&str; 5] = ["/tasks", "/tasks/1", "/tasks/2", "/help", "/scrapbook"];

/// A session of 1..=`max_actions` actions with non-decreasing timestamps.
pub fn random_session<R: Rng>(rng: &mut R, max_actions: usize) -> ScriptedSession {
    let n = rng.gen_range(1..=max_actions);
    let started_ts = rng.gen_range(1_600_000_000_000i64..1_700_000_000_000);
    let mut ts = started_ts;
    let mut c = Construction::new();
    let mut actions = Vec::with_capacity(n);
    for _ in 0..n {
        ts += match rng.gen_range(0..10) {
            0 => 0,
            1..=7 => rng.gen_range(1..3_000),
            _ => rng.gen_range(3_000..60_000),
        };
        let free: Vec<StepId> = c
            .steps()
            .iter()
            .filter(|s| s.kind == StepKind::FreePoint)
            .map(|s| s.id)
            .collect();
        let roll = rng.gen_range(0..100);
        let action = if roll < 15 {
            Action::Nav {
                page: PAGES.choose(rng).unwrap().to_string(),
                exit_after_ms: rng.gen_bool(0.7).then(|| rng.gen_range(0..120_000)),
            }
        } else if roll < 25 && !c.is_empty() {
            Action::Remove(c.steps().choose(rng).unwrap().id)
        } else if roll < 45 && !free.is_empty() {
            Action::Move { id: *free.choose(rng).unwrap(), x: coord(rng), y: coord(rng) }
        } else {
            let (kind, inputs, params) = random_step(rng, &c);
            Action::Add { kind, inputs, params }
        };
        c = apply(&c, &action);
        actions.push(TimedAction { ts, action });
    }
    ScriptedSession { started_ts, actions, final_construction: c }
}

/// The live kernel path for one action.
pub fn apply(c: &Construction, action: &Action) -> Construction {
    match action {
        Action::Add { kind, inputs, params } => c.add_step(*kind, inputs, params).expect("valid step").0,
        Action::Remove(id) => c.remove_step_cascade(*id).expect("existing step").0,
        Action::Move { id, x, y } => c.move_free_point(*id, *x, *y).expect("free point"),
        Action::Nav { .. } => c.clone(),
    }
}
