use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Two lines are parallel when the determinant of their unit normals is
/// below this; two points closer than this are coincident.
pub const EPSILON: f64 = 1e-12;

/// Relative tolerance on the squared half-chord below which a line/circle or
/// circle/circle pair is treated as tangent (a single touching point).
pub const TANGENCY_EPSILON: f64 = 1e-12;

/// Two x coordinates closer than this are considered equal when ordering
/// intersection branches, so that rounding noise cannot flip a branch.
pub const BRANCH_ORDER_EPSILON: f64 = 1e-9;

/// The concrete value of an evaluated step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum GeometryValue {
    Point { x: f64, y: f64 },
    /// `a·x + b·y + c = 0` with `a² + b² = 1` and the first nonzero of
    /// `(a, b)` positive.
    Line { a: f64, b: f64, c: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
    Segment { x1: f64, y1: f64, x2: f64, y2: f64 },
    Undefined,
}

impl GeometryValue {
    pub fn is_undefined(&self) -> bool {
        matches!(self, GeometryValue::Undefined)
    }

    pub fn as_point(&self) -> Option<(f64, f64)> {
        match *self {
            GeometryValue::Point { x, y } => Some((x, y)),
            _ => None,
        }
    }

    pub fn as_line(&self) -> Option<(f64, f64, f64)> {
        match *self {
            GeometryValue::Line { a, b, c } => Some((a, b, c)),
            _ => None,
        }
    }

    pub fn as_circle(&self) -> Option<(f64, f64, f64)> {
        match *self {
            GeometryValue::Circle { cx, cy, r } => Some((cx, cy, r)),
            _ => None,
        }
    }
}

pub(crate) type Pt = (f64, f64);

/// Line with normal `(a, b)` through `p`, normalized and sign-canonicalized.
pub(crate) fn line_with_normal(a: f64, b: f64, p: Pt) -> GeometryValue {
    let len = a.hypot(b);
    if len.is_nan() || len <= EPSILON {
        return GeometryValue::Undefined;
    }
    let (mut a, mut b) = (a / len, b / len);
    if a < 0.0 || (a == 0.0 && b < 0.0) {
        a = -a;
        b = -b;
    }
    // turn -0.0 into 0.0
    let a = a + 0.0;
    let b = b + 0.0;
    let c = -(a * p.0 + b * p.1) + 0.0;
    GeometryValue::Line { a, b, c }
}

pub(crate) fn line_through(p: Pt, q: Pt) -> GeometryValue {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    if dx.hypot(dy) < EPSILON {
        return GeometryValue::Undefined;
    }
    line_with_normal(-dy, dx, p)
}

pub(crate) fn midpoint(p: Pt, q: Pt) -> GeometryValue {
    GeometryValue::Point {
        x: (p.0 + q.0) / 2.0,
        y: (p.1 + q.1) / 2.0,
    }
}

pub(crate) fn circle(center: Pt, through: Pt) -> GeometryValue {
    GeometryValue::Circle {
        cx: center.0,
        cy: center.1,
        r: (through.0 - center.0).hypot(through.1 - center.1),
    }
}

pub(crate) fn intersect_lines(l1: (f64, f64, f64), l2: (f64, f64, f64)) -> GeometryValue {
    let (a1, b1, c1) = l1;
    let (a2, b2, c2) = l2;
    let det = a1 * b2 - a2 * b1;
    if det.abs() < EPSILON {
        return GeometryValue::Undefined;
    }
    GeometryValue::Point {
        x: (b1 * c2 - b2 * c1) / det,
        y: (a2 * c1 - a1 * c2) / det,
    }
}

/// Lexicographic `(x, y)` order with a tolerance on `x`.
pub(crate) fn branch_order(p: Pt, q: Pt) -> Ordering {
    if (p.0 - q.0).abs() > BRANCH_ORDER_EPSILON {
        p.0.total_cmp(&q.0)
    } else {
        p.1.total_cmp(&q.1)
    }
}

fn pick(p: Pt, q: Pt, second: bool) -> GeometryValue {
    let (lo, hi) = if branch_order(p, q) == Ordering::Greater {
        (q, p)
    } else {
        (p, q)
    };
    let (x, y) = if second { hi } else { lo };
    GeometryValue::Point { x, y }
}

/// Half-chord length from its square, or `None` when there is no real
/// intersection. Values within the tangency tolerance snap to zero.
fn half_chord(h2: f64, r: f64) -> Option<f64> {
    let tol = TANGENCY_EPSILON * (r * r).max(1.0);
    if h2 < -tol {
        None
    } else if h2 <= tol {
        Some(0.0)
    } else {
        Some(h2.sqrt())
    }
}

pub(crate) fn intersect_line_circle(
    line: (f64, f64, f64),
    circle: (f64, f64, f64),
    second: bool,
) -> GeometryValue {
    let (a, b, c) = line;
    let (cx, cy, r) = circle;
    let s = a * cx + b * cy + c;
    let foot = (cx - a * s, cy - b * s);
    let Some(h) = half_chord(r * r - s * s, r) else {
        return GeometryValue::Undefined;
    };
    let p = (foot.0 - b * h, foot.1 + a * h);
    let q = (foot.0 + b * h, foot.1 - a * h);
    pick(p, q, second)
}

pub(crate) fn intersect_circles(
    c1: (f64, f64, f64),
    c2: (f64, f64, f64),
    second: bool,
) -> GeometryValue {
    let (x1, y1, r1) = c1;
    let (x2, y2, r2) = c2;
    let (dx, dy) = (x2 - x1, y2 - y1);
    let d = dx.hypot(dy);
    if d < EPSILON {
        return GeometryValue::Undefined;
    }
    let along = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let Some(h) = half_chord(r1 * r1 - along * along, r1) else {
        return GeometryValue::Undefined;
    };
    let (ux, uy) = (dx / d, dy / d);
    let base = (x1 + ux * along, y1 + uy * along);
    let p = (base.0 - uy * h, base.1 + ux * h);
    let q = (base.0 + uy * h, base.1 - ux * h);
    pick(p, q, second)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_unit_normal_and_canonical() {
        let GeometryValue::Line { a, b, c } = line_through((1.0, 5.0), (1.0, -3.0)) else {
            panic!("expected a line");
        };
        assert!((a * a + b * b - 1.0).abs() < 1e-12);
        assert!(a > 0.0);
        assert_eq!(b, 0.0);
        assert!((c + 1.0).abs() < 1e-15);

        // horizontal: a is zero so b must be positive
        let GeometryValue::Line { a, b, .. } = line_through((3.0, 2.0), (-1.0, 2.0)) else {
            panic!("expected a line");
        };
        assert_eq!(a, 0.0);
        assert!(a.is_sign_positive());
        assert_eq!(b, 1.0);
    }

    #[test]
    fn coincident_points_give_no_line() {
        assert!(line_through((2.0, 2.0), (2.0, 2.0)).is_undefined());
    }

    #[test]
    fn parallel_lines_do_not_meet() {
        let l1 = line_through((0.0, 0.0), (1.0, 1.0)).as_line().unwrap();
        let l2 = line_through((0.0, 1.0), (1.0, 2.0)).as_line().unwrap();
        assert!(intersect_lines(l1, l2).is_undefined());
        assert!(intersect_lines(l1, l1).is_undefined());
    }

    #[test]
    fn tangent_line_gives_one_point_on_both_branches() {
        let circle = (0.0, 0.0, 1.0);
        let line = line_through((-3.0, 1.0), (3.0, 1.0)).as_line().unwrap();
        let p = intersect_line_circle(line, circle, false);
        let q = intersect_line_circle(line, circle, true);
        assert_eq!(p, q);
        assert_eq!(p.as_point(), Some((0.0, 1.0)));
    }

    #[test]
    fn zero_radius_circle_on_line() {
        let line = line_through((-3.0, 0.0), (3.0, 0.0)).as_line().unwrap();
        let p = intersect_line_circle(line, (2.0, 0.0, 0.0), true);
        assert_eq!(p.as_point(), Some((2.0, 0.0)));
        let off = intersect_line_circle(line, (2.0, 1.0, 0.0), false);
        assert!(off.is_undefined());
    }

    #[test]
    fn vertical_chord_orders_by_y() {
        // both intersection points share x = 0 up to rounding
        let line = line_through((0.0, -7.0), (0.0, 7.0)).as_line().unwrap();
        let lo = intersect_line_circle(line, (0.0, 0.0, 2.0), false);
        let hi = intersect_line_circle(line, (0.0, 0.0, 2.0), true);
        assert!(lo.as_point().unwrap().1 < hi.as_point().unwrap().1);
    }

    #[test]
    fn concentric_circles_are_undefined() {
        assert!(intersect_circles((1.0, 1.0, 2.0), (1.0, 1.0, 3.0), false).is_undefined());
        assert!(intersect_circles((1.0, 1.0, 2.0), (1.0, 1.0, 2.0), false).is_undefined());
    }
}
