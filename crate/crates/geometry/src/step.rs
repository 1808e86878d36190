use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a step, unique within one construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepId(pub u64);

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for StepId {
    fn from(v: u64) -> Self {
        StepId(v)
    }
}

/// Which of the two intersection points of a line/circle or circle/circle
/// pair a step selects. `First` is the point with the lexicographically
/// smaller `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    First,
    Second,
}

impl Branch {
    pub fn index(self) -> u8 {
        match self {
            Branch::First => 0,
            Branch::Second => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Branch> {
        match i {
            0 => Some(Branch::First),
            1 => Some(Branch::Second),
            _ => None,
        }
    }
}

/// The kind of value a step produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Point,
    Line,
    Segment,
    Circle,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Point => "Point",
            ValueKind::Line => "Line",
            ValueKind::Segment => "Segment",
            ValueKind::Circle => "Circle",
        };
        f.write_str(s)
    }
}

/// The construction tools available to a student.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    FreePoint,
    LineThroughPoints,
    SegmentThroughPoints,
    CircleCenterThroughPoint,
    Midpoint,
    IntersectLineLine,
    IntersectLineCircle(Branch),
    IntersectCircleCircle(Branch),
    PerpendicularThroughPoint,
    ParallelThroughPoint,
}

impl StepKind {
    /// Value kinds the inputs must have, in order.
    pub fn input_kinds(self) -> &'static [ValueKind] {
        use ValueKind::*;
        match self {
            StepKind::FreePoint => &[],
            StepKind::LineThroughPoints
            | StepKind::SegmentThroughPoints
            | StepKind::CircleCenterThroughPoint
            | StepKind::Midpoint => &[Point, Point],
            StepKind::IntersectLineLine => &[Line, Line],
            StepKind::IntersectLineCircle(_) => &[Line, Circle],
            StepKind::IntersectCircleCircle(_) => &[Circle, Circle],
            StepKind::PerpendicularThroughPoint | StepKind::ParallelThroughPoint => &[Line, Point],
        }
    }

    /// Number of real parameters the step carries.
    pub fn param_count(self) -> usize {
        match self {
            StepKind::FreePoint => 2,
            _ => 0,
        }
    }

    pub fn output_kind(self) -> ValueKind {
        match self {
            StepKind::FreePoint
            | StepKind::Midpoint
            | StepKind::IntersectLineLine
            | StepKind::IntersectLineCircle(_)
            | StepKind::IntersectCircleCircle(_) => ValueKind::Point,
            StepKind::LineThroughPoints
            | StepKind::PerpendicularThroughPoint
            | StepKind::ParallelThroughPoint => ValueKind::Line,
            StepKind::SegmentThroughPoints => ValueKind::Segment,
            StepKind::CircleCenterThroughPoint => ValueKind::Circle,
        }
    }

    pub fn branch(self) -> Option<Branch> {
        match self {
            StepKind::IntersectLineCircle(b) | StepKind::IntersectCircleCircle(b) => Some(b),
            _ => None,
        }
    }

    /// Name used in the file format.
    pub fn name(self) -> &'static str {
        match self {
            StepKind::FreePoint => "FreePoint",
            StepKind::LineThroughPoints => "LineThroughPoints",
            StepKind::SegmentThroughPoints => "SegmentThroughPoints",
            StepKind::CircleCenterThroughPoint => "CircleCenterThroughPoint",
            StepKind::Midpoint => "Midpoint",
            StepKind::IntersectLineLine => "IntersectLineLine",
            StepKind::IntersectLineCircle(_) => "IntersectLineCircle",
            StepKind::IntersectCircleCircle(_) => "IntersectCircleCircle",
            StepKind::PerpendicularThroughPoint => "PerpendicularThroughPoint",
            StepKind::ParallelThroughPoint => "ParallelThroughPoint",
        }
    }

    /// Inverse of [`StepKind::name`]. Branched kinds need their branch.
    pub fn from_name(name: &str, branch: Option<Branch>) -> Option<StepKind> {
        let kind = match name {
            "FreePoint" => StepKind::FreePoint,
            "LineThroughPoints" => StepKind::LineThroughPoints,
            "SegmentThroughPoints" => StepKind::SegmentThroughPoints,
            "CircleCenterThroughPoint" => StepKind::CircleCenterThroughPoint,
            "Midpoint" => StepKind::Midpoint,
            "IntersectLineLine" => StepKind::IntersectLineLine,
            "IntersectLineCircle" => return branch.map(StepKind::IntersectLineCircle),
            "IntersectCircleCircle" => return branch.map(StepKind::IntersectCircleCircle),
            "PerpendicularThroughPoint" => StepKind::PerpendicularThroughPoint,
            "ParallelThroughPoint" => StepKind::ParallelThroughPoint,
            _ => return None,
        };
        match branch {
            None => Some(kind),
            Some(_) => None,
        }
    }

    pub const ALL: [StepKind; 12] = [
        StepKind::FreePoint,
        StepKind::LineThroughPoints,
        StepKind::SegmentThroughPoints,
        StepKind::CircleCenterThroughPoint,
        StepKind::Midpoint,
        StepKind::IntersectLineLine,
        StepKind::IntersectLineCircle(Branch::First),
        StepKind::IntersectLineCircle(Branch::Second),
        StepKind::IntersectCircleCircle(Branch::First),
        StepKind::IntersectCircleCircle(Branch::Second),
        StepKind::PerpendicularThroughPoint,
        StepKind::ParallelThroughPoint,
    ];
}

/// One recorded construction step.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionStep {
    pub id: StepId,
    pub kind: StepKind,
    pub inputs: Vec<StepId>,
    pub params: Vec<f64>,
}
