use std::collections::HashMap;

use geolab_geometry::{Branch, Construction, GeometryValue, StepId, StepKind};

type P = (f64, f64);

const COINCIDENT: f64 = 1e-12;
const TANGENT: f64 = 1e-12;
const ORDER: f64 = 1e-9;

/// Oracle-side representation of a step value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obj {
    Point(P),
    /// The line through two distinct points.
    Line(P, P),
    Segment(P, P),
    /// Center and radius.
    Circle(P, f64),
    Undefined,
}

fn sub(a: P, b: P) -> P {
    (a.0 - b.0, a.1 - b.1)
}
fn dot(a: P, b: P) -> f64 {
    a.0 * b.0 + a.1 * b.1
}
fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}
fn norm(a: P) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `p1 + t·d1 = p2 + s·d2`.
fn meet_lines(p1: P, q1: P, p2: P, q2: P) -> Obj {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let den = cross(d1, d2);
    // sine of the angle between the lines
    if (den / (norm(d1) * norm(d2))).abs() < COINCIDENT {
        return Obj::Undefined;
    }
    let t = cross(sub(p2, p1), d2) / den;
    Obj::Point((p1.0 + t * d1.0, p1.1 + t * d1.1))
}

fn order(a: P, b: P) -> (P, P) {
    let swap = if (a.0 - b.0).abs() > ORDER { a.0 > b.0 } else { a.1 > b.1 };
    if swap {
        (b, a)
    } else {
        (a, b)
    }
}

fn choose(a: P, b: P, branch: Branch) -> Obj {
    let (lo, hi) = order(a, b);
    Obj::Point(if branch == Branch::First { lo } else { hi })
}

/// Roots of `|p + t·d − c|² = r²` in t.
fn meet_line_circle(p: P, q: P, c: P, r: f64, branch: Branch) -> Obj {
    let d = sub(q, p);
    let w = sub(p, c);
    let qa = dot(d, d);
    let qb = 2.0 * dot(d, w);
    let qc = dot(w, w) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    // squared half-chord length
    let h2 = disc / (4.0 * qa);
    let tol = TANGENT * (r * r).max(1.0);
    let root = if h2 < -tol {
        return Obj::Undefined;
    } else if h2 <= tol {
        0.0
    } else {
        disc.sqrt()
    };
    let t1 = (-qb - root) / (2.0 * qa);
    let t2 = (-qb + root) / (2.0 * qa);
    choose(
        (p.0 + t1 * d.0, p.1 + t1 * d.1),
        (p.0 + t2 * d.0, p.1 + t2 * d.1),
        branch,
    )
}

/// Subtracting the circle equations leaves the radical axis
/// `2(c2 − c1)·X = |c2|² − r2² − |c1|² + r1²`; intersect it with circle 1.
fn meet_circles(c1: P, r1: f64, c2: P, r2: f64, branch: Branch) -> Obj {
    let n = sub(c2, c1);
    let nn = dot(n, n);
    if nn.sqrt() < COINCIDENT {
        return Obj::Undefined;
    }
    let rhs = dot(c2, c2) - r2 * r2 - dot(c1, c1) + r1 * r1;
    let k = (rhs - 2.0 * dot(n, c1)) / (2.0 * nn);
    let x0 = (c1.0 + k * n.0, c1.1 + k * n.1);
    let x1 = (x0.0 - n.1, x0.1 + n.0);
    meet_line_circle(x0, x1, c1, r1, branch)
}

/// Evaluates every step with the oracle's own formulas.
pub fn solve(c: &Construction) -> Vec<(StepId, Obj)> {
    let mut by_id: HashMap<StepId, Obj> = HashMap::new();
    let mut out = Vec::new();
    for step in c.steps() {
        let ins: Vec<Obj> = step.inputs.iter().map(|i| by_id[i]).collect();
        let obj = if ins.contains(&Obj::Undefined) {
            Obj::Undefined
        } else {
            solve_step(step.kind, &ins, &step.params)
        };
        by_id.insert(step.id, obj);
        out.push((step.id, obj));
    }
    out
}

fn solve_step(kind: StepKind, ins: &[Obj], params: &[f64]) -> Obj {
    use Obj::*;
    match (kind, ins) {
        (StepKind::FreePoint, _) => Point((params[0], params[1])),
        (StepKind::LineThroughPoints, [Point(p), Point(q)]) => {
            if norm(sub(*q, *p)) < COINCIDENT {
                Undefined
            } else {
                Line(*p, *q)
            }
        }
        (StepKind::SegmentThroughPoints, [Point(p), Point(q)]) => Segment(*p, *q),
        (StepKind::CircleCenterThroughPoint, [Point(c), Point(p)]) => Circle(*c, norm(sub(*p, *c))),
        (StepKind::Midpoint, [Point(p), Point(q)]) => Point((0.5 * p.0 + 0.5 * q.0, 0.5 * p.1 + 0.5 * q.1)),
        (StepKind::IntersectLineLine, [Line(p1, q1), Line(p2, q2)]) => meet_lines(*p1, *q1, *p2, *q2),
        (StepKind::IntersectLineCircle(b), [Line(p, q), Circle(c, r)]) => meet_line_circle(*p, *q, *c, *r, b),
        (StepKind::IntersectCircleCircle(b), [Circle(c1, r1), Circle(c2, r2)]) => {
            meet_circles(*c1, *r1, *c2, *r2, b)
        }
        (StepKind::PerpendicularThroughPoint, [Line(p, q), Point(x)]) => {
            let d = sub(*q, *p);
            Line(*x, (x.0 - d.1, x.1 + d.0))
        }
        (StepKind::ParallelThroughPoint, [Line(p, q), Point(x)]) => {
            let d = sub(*q, *p);
            Line(*x, (x.0 + d.0, x.1 + d.1))
        }
        _ => panic!("oracle received ill-typed inputs for {kind:?}"),
    }
}

/// Distance from `x` to an oracle object's locus (line or circle).
pub fn residual(obj: &Obj, x: P) -> f64 {
    match *obj {
        Obj::Line(p, q) => {
            let d = sub(q, p);
            cross(d, sub(x, p)).abs() / norm(d)
        }
        Obj::Circle(c, r) => (norm(sub(x, c)) - r).abs(),
        _ => 0.0,
    }
}

/// Result of checking one construction against the oracle.
#[derive(Debug, Default, Clone)]
pub struct Comparison {
    pub points_compared: usize,
    pub max_point_error: f64,
    pub max_residual: f64,
    pub residuals_checked: usize,
    /// Steps where exactly one side produced a defined point.
    pub definedness_mismatches: Vec<StepId>,
    /// Steps where the point differs by more than the tolerance.
    pub point_mismatches: Vec<StepId>,
    /// Intersection steps whose point misses one of its input loci.
    pub residual_failures: Vec<StepId>,
}

impl Comparison {
    pub fn ok(&self) -> bool {
        self.definedness_mismatches.is_empty()
            && self.point_mismatches.is_empty()
            && self.residual_failures.is_empty()
    }
}

/// Compares the kernel's evaluation of `c` against the oracle.
pub fn compare(
    c: &Construction,
    kernel: impl Fn(StepId) -> GeometryValue,
    tolerance: f64,
) -> Comparison {
    let solved = solve(c);
    let lookup: HashMap<StepId, Obj> = solved.iter().copied().collect();
    let mut cmp = Comparison::default();
    for (step, (id, obj)) in c.steps().iter().zip(&solved) {
        let value = kernel(*id);
        let kernel_point = value.as_point();
        let oracle_point = match obj {
            Obj::Point(p) => Some(*p),
            _ => None,
        };
        if step.kind.output_kind() != geolab_geometry::ValueKind::Point {
            if value.is_undefined() != (*obj == Obj::Undefined) {
                cmp.definedness_mismatches.push(*id);
            }
            continue;
        }
        match (kernel_point, oracle_point) {
            (Some(k), Some(o)) => {
                cmp.points_compared += 1;
                let err = (k.0 - o.0).abs().max((k.1 - o.1).abs());
                cmp.max_point_error = cmp.max_point_error.max(err);
                if err.is_nan() || err > tolerance {
                    cmp.point_mismatches.push(*id);
                }
                let is_intersection = matches!(
                    step.kind,
                    StepKind::IntersectLineLine
                        | StepKind::IntersectLineCircle(_)
                        | StepKind::IntersectCircleCircle(_)
                );
                if is_intersection {
                    for input in &step.inputs {
                        let r = residual(&lookup[input], k);
                        cmp.residuals_checked += 1;
                        cmp.max_residual = cmp.max_residual.max(r);
                        if r.is_nan() || r >= tolerance {
                            cmp.residual_failures.push(*id);
                        }
                    }
                }
            }
            (None, None) => {}
            _ => cmp.definedness_mismatches.push(*id),
        }
    }
    cmp
}
