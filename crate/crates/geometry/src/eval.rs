use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::construction::Construction;
use crate::step::{StepId, StepKind};
use crate::value::{self, GeometryValue};

/// Concrete values for every step of a construction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evaluation {
    values: BTreeMap<StepId, GeometryValue>,
}

impl Evaluation {
    pub fn get(&self, id: StepId) -> Option<&GeometryValue> {
        self.values.get(&id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StepId, &GeometryValue)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }
}

/// Evaluates every step in order. Never fails: degenerate steps and anything
/// depending on them come out as [`GeometryValue::Undefined`].
pub fn evaluate(c: &Construction) -> Evaluation {
    let mut values: BTreeMap<StepId, GeometryValue> = BTreeMap::new();
    for step in c.steps() {
        let inputs: Vec<GeometryValue> = step
            .inputs
            .iter()
            .map(|id| values.get(id).copied().unwrap_or(GeometryValue::Undefined))
            .collect();
        let value = if inputs.iter().any(GeometryValue::is_undefined) {
            GeometryValue::Undefined
        } else {
            eval_step(step.kind, &inputs, &step.params)
        };
        values.insert(step.id, value);
    }
    Evaluation { values }
}

fn eval_step(kind: StepKind, inputs: &[GeometryValue], params: &[f64]) -> GeometryValue {
    let point = |i: usize| inputs[i].as_point();
    let line = |i: usize| inputs[i].as_line();
    let circle = |i: usize| inputs[i].as_circle();
    let out = match kind {
        StepKind::FreePoint => Some(GeometryValue::Point {
            x: params[0],
            y: params[1],
        }),
        StepKind::LineThroughPoints => point(0)
            .zip(point(1))
            .map(|(p, q)| value::line_through(p, q)),
        StepKind::SegmentThroughPoints => point(0).zip(point(1)).map(|(p, q)| GeometryValue::Segment {
            x1: p.0,
            y1: p.1,
            x2: q.0,
            y2: q.1,
        }),
        StepKind::CircleCenterThroughPoint => point(0)
            .zip(point(1))
            .map(|(c, p)| value::circle(c, p)),
        StepKind::Midpoint => point(0).zip(point(1)).map(|(p, q)| value::midpoint(p, q)),
        StepKind::IntersectLineLine => line(0)
            .zip(line(1))
            .map(|(l1, l2)| value::intersect_lines(l1, l2)),
        StepKind::IntersectLineCircle(branch) => line(0)
            .zip(circle(1))
            .map(|(l, c)| value::intersect_line_circle(l, c, branch.index() == 1)),
        StepKind::IntersectCircleCircle(branch) => circle(0)
            .zip(circle(1))
            .map(|(c1, c2)| value::intersect_circles(c1, c2, branch.index() == 1)),
        StepKind::PerpendicularThroughPoint => line(0)
            .zip(point(1))
            .map(|((a, b, _), p)| value::line_with_normal(-b, a, p)),
        StepKind::ParallelThroughPoint => line(0)
            .zip(point(1))
            .map(|((a, b, _), p)| value::line_with_normal(a, b, p)),
    };
    out.unwrap_or(GeometryValue::Undefined)
}
