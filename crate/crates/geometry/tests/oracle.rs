use geolab_geometry::{evaluate, parse_construction, serialize_construction, Construction};
use geolab_testkit::gen::random_construction;
use geolab_testkit::oracle::compare;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn sample(seed: u64, n: usize) -> Vec<Construction> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=12);
            random_construction(&mut rng, len)
        })
        .collect()
}

#[test]
fn kernel_matches_oracle_on_random_constructions() {
    let mut compared = 0;
    let mut worst = 0.0f64;
    for (i, c) in sample(7, 2_000).iter().enumerate() {
        let ev = evaluate(c);
        let cmp = compare(c, |id| *ev.get(id).unwrap(), 1e-9);
        assert!(cmp.ok(), "construction {i}: {cmp:?}\n{}", String::from_utf8_lossy(&serialize_construction(c)));
        compared += cmp.points_compared;
        worst = worst.max(cmp.max_point_error);
    }
    assert!(compared > 2_000, "too few defined points: {compared}");
    assert!(worst <= 1e-9);
}

#[test]
fn evaluation_is_deterministic() {
    for c in sample(11, 300) {
        let a = evaluate(&c);
        let b = evaluate(&c);
        for ((ia, va), (ib, vb)) in a.iter().zip(b.iter()) {
            assert_eq!(ia, ib);
            assert_eq!(format!("{va:?}"), format!("{vb:?}"));
        }
    }
}

#[test]
fn evaluation_domain_is_step_set() {
    for c in sample(13, 200) {
        let ev = evaluate(&c);
        let ids: Vec<_> = ev.iter().map(|(id, _)| id).collect();
        let steps: Vec<_> = c.steps().iter().map(|s| s.id).collect();
        assert_eq!(ids, steps);
    }
}

#[test]
fn canonical_serialization_is_stable() {
    for c in sample(17, 300) {
        let bytes = serialize_construction(&c);
        let parsed = parse_construction(&bytes).unwrap();
        assert_eq!(parsed, c);
        assert_eq!(serialize_construction(&parsed), bytes);
    }
}
