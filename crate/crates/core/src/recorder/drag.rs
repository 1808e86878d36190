use geolab_geometry::StepId;

use super::model::{GeometryAction, LogEvent};

pub const DRAG_SAMPLE_MS: i64 = 100;

/// Thins a continuous drag of one free point to at most one event per
/// sampling period, plus the final position.
#[derive(Debug, Clone)]
pub struct DragCoalescer {
    id: StepId,
    period_ms: i64,
    last_emitted: Option<(i64, f64, f64)>,
    latest: Option<(i64, f64, f64)>,
}

impl DragCoalescer {
    pub fn new(id: StepId) -> Self {
        Self::with_period(id, DRAG_SAMPLE_MS)
    }

    pub fn with_period(id: StepId, period_ms: i64) -> Self {
        DragCoalescer { id, period_ms, last_emitted: None, latest: None }
    }

    fn event(&self, (ts, x, y): (i64, f64, f64)) -> LogEvent {
        LogEvent::geo(ts, GeometryAction::MoveFreePoint { id: self.id, x, y })
    }

    /// Feeds one pointer position; returns an event when a sample is due.
    pub fn sample(&mut self, ts: i64, x: f64, y: f64) -> Option<LogEvent> {
        self.latest = Some((ts, x, y));
        let due = match self.last_emitted {
            None => true,
            Some((t, _, _)) => ts - t >= self.period_ms,
        };
        if due {
            self.last_emitted = self.latest;
            Some(self.event((ts, x, y)))
        } else {
            None
        }
    }

    /// Ends the drag, emitting the final position unless it was the last
    /// sample sent.
    pub fn finish(self) -> Option<LogEvent> {
        let latest = self.latest?;
        (self.last_emitted != Some(latest)).then(|| self.event(latest))
    }
}
