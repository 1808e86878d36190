use std::sync::Arc;

use geolab_geometry::{evaluate, Branch, Construction, Evaluation, StepKind};

use super::model::*;

/// Applies one event. Navigation events leave the construction unchanged.
pub fn apply_event(c: &Construction, event: &LogEvent) -> RecorderResult<Construction> {
    let invalid = |e: geolab_geometry::ConstructionError| RecorderError::InvalidEvent(e.to_string());
    match &event.body {
        EventBody::Nav(nav) => {
            if nav.exit_ts.is_some_and(|exit| exit < nav.enter_ts) {
                return Err(RecorderError::InvalidEvent("exit_ts precedes enter_ts".into()));
            }
            Ok(c.clone())
        }
        EventBody::Geo(GeometryAction::AddStep { kind, inputs, params, branch }) => {
            let branch = match branch {
                None => None,
                Some(b) => Some(
                    Branch::from_index(*b).ok_or_else(|| RecorderError::InvalidEvent(format!("bad branch {b}")))?,
                ),
            };
            let kind = StepKind::from_name(kind, branch)
                .ok_or_else(|| RecorderError::InvalidEvent(format!("bad step kind {kind:?}")))?;
            c.add_step(kind, inputs, params).map(|(c, _)| c).map_err(invalid)
        }
        EventBody::Geo(GeometryAction::RemoveStep { id }) => c.remove_step_cascade(*id).map(|(c, _)| c).map_err(invalid),
        EventBody::Geo(GeometryAction::MoveFreePoint { id, x, y }) => c.move_free_point(*id, *x, *y).map_err(invalid),
    }
}

/// Folds the first `index` events over the empty construction.
pub fn reconstruct_at(log: &SessionLog, index: usize) -> RecorderResult<(Construction, Evaluation)> {
    if index > log.events.len() {
        return Err(RecorderError::IndexOutOfRange { index, len: log.events.len() });
    }
    let mut c = Construction::new();
    for e in &log.events[..index] {
        c = apply_event(&c, e)?;
    }
    let eval = evaluate(&c);
    Ok((c, eval))
}

/// Playback delays: each event waits `(ts[i] - ts[i-1]) / speed`, rounded to
/// the nearest millisecond. The first event has no delay.
pub fn replay_schedule(log: &SessionLog, speed: f64) -> RecorderResult<Vec<ScheduleEntry>> {
    if !speed.is_finite() || speed <= 0.0 {
        return Err(RecorderError::NonPositiveSpeed);
    }
    if !log.manifest.finished {
        return Err(RecorderError::UnfinishedLog);
    }
    Ok(log
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let gap = if i == 0 { 0 } else { e.ts - log.events[i - 1].ts };
            ScheduleEntry {
                delay_ms: (gap as f64 / speed).round() as u64,
                event_index: i,
            }
        })
        .collect())
}

/// Result of one [`ReplayCursor::step`].
#[derive(Debug, Clone)]
pub struct ReplayStep {
    pub position: usize,
    pub event: LogEvent,
    pub evaluation: Evaluation,
}

/// Step-by-step playback position in a log.
#[derive(Debug, Clone)]
pub struct ReplayCursor {
    log: Arc<SessionLog>,
    position: usize,
    reconstructed: Construction,
}

impl ReplayCursor {
    pub fn new(log: Arc<SessionLog>) -> Self {
        ReplayCursor { log, position: 0, reconstructed: Construction::new() }
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn event_count(&self) -> usize {
        self.log.events.len()
    }

    pub fn reconstructed(&self) -> &Construction {
        &self.reconstructed
    }

    pub fn step(&mut self) -> RecorderResult<ReplayStep> {
        let event = self.log.events.get(self.position).ok_or(RecorderError::EndOfLog)?.clone();
        self.reconstructed = apply_event(&self.reconstructed, &event)?;
        self.position += 1;
        Ok(ReplayStep {
            position: self.position,
            event,
            evaluation: evaluate(&self.reconstructed),
        })
    }
}
