use parabolic::decomposition::{
    decompose, decompose_pattern, harvest_good_segments, in_d_alpha, in_good, lambda_pattern, pattern_in_bad,
    pattern_in_good, random_segments, DecompositionParams,
};
use parabolic::periodic::omega;
use parabolic::pressure::generic_anchor;
use parabolic::registry::example;
use parabolic::Tolerances;
use proptest::prelude::*;

/// Scans every split and keeps the longest bad suffix whose prefix is good,
/// comparing averages in integer arithmetic against a rational η = p/q.
fn scan_split(lambda: &[u8], p: u32, q: u32) -> (usize, usize) {
    let ones = |w: &[u8]| w.iter().filter(|&&b| b == 1).count() as u32;
    let n = lambda.len();
    let mut best = None;
    for g in 0..=n {
        let (pre, suf) = lambda.split_at(g);
        let bad = suf.is_empty() || ones(suf) * q < p * suf.len() as u32;
        let good = (1..=pre.len()).all(|k| ones(&pre[pre.len() - k..]) * q >= p * k as u32);
        if bad && good && best.is_none() {
            best = Some((g, n - g));
        }
    }
    best.expect("g = 0 always splits")
}

fn eta_fraction() -> impl Strategy<Value = (u32, u32)> {
    (1u32..=10).prop_flat_map(|q| (1u32..=q, Just(q)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn decomposition_matches_the_split_scan(lambda in prop::collection::vec(0u8..=1, 0..60), (p, q) in eta_fraction()) {
        let eta = p as f64 / q as f64;
        let (g, s) = decompose_pattern(&lambda, eta);
        prop_assert_eq!((g, s), scan_split(&lambda, p, q));
        prop_assert_eq!(g + s, lambda.len());
        if g > 0 {
            prop_assert!(pattern_in_good(&lambda[..g], eta));
            prop_assert_eq!(lambda[g - 1], 1);
        }
        if s > 0 {
            prop_assert!(pattern_in_bad(&lambda[g..], eta));
        }
    }

    #[test]
    fn good_patterns_are_closed_under_good_extension(a in prop::collection::vec(0u8..=1, 1..30), b in prop::collection::vec(0u8..=1, 1..30), (p, q) in eta_fraction()) {
        let eta = p as f64 / q as f64;
        // Concatenating two good words stays good: every suffix splits into a
        // suffix of b and possibly all of b plus a suffix of a.
        if pattern_in_good(&a, eta) && pattern_in_good(&b, eta) {
            let ab: Vec<u8> = a.iter().chain(&b).copied().collect();
            prop_assert!(pattern_in_good(&ab, eta));
        }
    }
}

#[test]
fn orbit_segments_decompose_consistently() {
    let tol = Tolerances::default();
    for name in ["quad_parabolic", "blaschke_parabolic"] {
        let map = example(name).unwrap();
        let om = omega(&map, 4, &tol).unwrap();
        let anchor = generic_anchor(&map, &om, &tol).unwrap();
        let segs = random_segments(&map, anchor, 2000, 1..=40, 11, &tol).unwrap();
        let pts = om.points();
        for alpha in [0.2, 0.05] {
            for (p, q) in [(1, 5), (1, 2), (4, 5)] {
                let eta = p as f64 / q as f64;
                let params = DecompositionParams::new(alpha, eta).unwrap();
                for seg in &segs {
                    let (g, s) = decompose(seg, &pts, &params);
                    let lambda = lambda_pattern(&seg.points, &pts, alpha);
                    assert_eq!((g, s), scan_split(&lambda, p, q));
                    assert_eq!(g + s, seg.len());
                    if in_good(seg, &pts, &params) {
                        assert!(in_d_alpha(seg, &pts, alpha));
                    }
                }
            }
        }
    }
}

#[test]
fn harvested_segments_are_good_and_on_orbits() {
    let tol = Tolerances::default();
    let map = example("quad_parabolic").unwrap();
    let om = omega(&map, 4, &tol).unwrap();
    let anchor = generic_anchor(&map, &om, &tol).unwrap();
    let params = DecompositionParams::new(0.2, 0.5).unwrap();
    let segs = harvest_good_segments(&map, anchor, &om.points(), &params, 20, 50, 4, &tol).unwrap();
    assert_eq!(segs.len(), 50);
    for seg in &segs {
        assert_eq!(seg.len(), 20);
        assert!(in_good(seg, &om.points(), &params));
        for w in seg.points.windows(2) {
            assert!((map.evaluate(w[0]) - w[1]).norm() < 1e-12);
        }
    }
    let again = harvest_good_segments(&map, anchor, &om.points(), &params, 20, 50, 4, &tol).unwrap();
    assert_eq!(segs, again);
}

#[test]
fn parameters_are_validated() {
    assert!(DecompositionParams::new(0.0, 0.5).is_err());
    assert!(DecompositionParams::new(0.1, 0.0).is_err());
    assert!(DecompositionParams::new(0.1, 1.5).is_err());
    assert!(DecompositionParams::new(0.1, 1.0).is_ok());
}
