use geolab_geometry::{Branch, Construction, StepId, StepKind, ValueKind};
use rand::seq::SliceRandom;
use rand::Rng;

/// A random rational coordinate: a multiple of 1/4 in [-10, 10].
pub fn coord<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-40i32..=40) as f64 / 4.0
}

fn ids_of_kind(c: &Construction, kind: ValueKind) -> Vec<StepId> {
    c.steps()
        .iter()
        .filter(|s| s.kind.output_kind() == kind)
        .map(|s| s.id)
        .collect()
}

/// Kinds whose input requirements can be met by `c`.
pub fn available_kinds(c: &Construction) -> Vec<StepKind> {
    StepKind::ALL
        .iter()
        .copied()
        .filter(|k| {
            k.input_kinds()
                .iter()
                .all(|vk| !ids_of_kind(c, *vk).is_empty())
        })
        .collect()
}

/// Picks a random step that `add_step` will accept, as (kind, inputs, params).
pub fn random_step<R: Rng>(rng: &mut R, c: &Construction) -> (StepKind, Vec<StepId>, Vec<f64>) {
    // Keep a healthy supply of free points early on.
    let points = ids_of_kind(c, ValueKind::Point).len();
    let kinds = available_kinds(c);
    let kind = if points < 2 || rng.gen_bool(0.2) {
        StepKind::FreePoint
    } else {
        *kinds.choose(rng).expect("FreePoint is always available")
    };
    let inputs = kind
        .input_kinds()
        .iter()
        .map(|vk| *ids_of_kind(c, *vk).choose(rng).unwrap())
        .collect();
    let params = if kind == StepKind::FreePoint {
        vec![coord(rng), coord(rng)]
    } else {
        vec![]
    };
    (kind, inputs, params)
}

/// A random valid construction with exactly `steps` steps.
pub fn random_construction<R: Rng>(rng: &mut R, steps: usize) -> Construction {
    let mut c = Construction::new();
    for _ in 0..steps {
        let (kind, inputs, params) = random_step(rng, &c);
        c = c
            .add_step(kind, &inputs, &params)
            .expect("generator only produces valid steps")
            .0;
    }
    c
}

pub fn random_branch<R: Rng>(rng: &mut R) -> Branch {
    if rng.gen_bool(0.5) {
        Branch::First
    } else {
        Branch::Second
    }
}
