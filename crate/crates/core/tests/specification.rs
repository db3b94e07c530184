use num_complex::Complex64;
use parabolic::decomposition::{harvest_good_segments, in_d_alpha, random_segments, DecompositionParams};
use parabolic::julia::{sample_capped_tree, CappedTreeParams};
use parabolic::metric::{calibrate, Calibration, ALPHA_LADDER, DEFAULT_TRUNCATION};
use parabolic::periodic::{omega, OmegaSet};
use parabolic::potential::{birkhoff_sum_along, Potential};
use parabolic::pressure::generic_anchor;
use parabolic::registry::example;
use parabolic::spec_verify::{
    bowen_variation, contraction_profile, estimate_transition_time, glue, gluing_offsets, greedy_net, holder_data,
    shadow_partner, verify_shadowing, TransitionParams,
};
use parabolic::{RationalMap, Tolerances};
use proptest::prelude::*;

struct Setup {
    map: RationalMap,
    om: OmegaSet,
    anchor: Complex64,
    sample: Vec<Complex64>,
    cal: Calibration,
}

fn setup(name: &str) -> Setup {
    let tol = Tolerances::default();
    let map = example(name).unwrap();
    let om = omega(&map, 4, &tol).unwrap();
    let anchor = generic_anchor(&map, &om, &tol).unwrap();
    let params = CappedTreeParams {
        cell: 1e-3,
        ..Default::default()
    };
    let sample = sample_capped_tree(&map, anchor, params, 0, &tol).unwrap().points;
    let cal = calibrate(&map, &om, &sample, &ALPHA_LADDER, DEFAULT_TRUNCATION, &tol).unwrap();
    Setup {
        map,
        om,
        anchor,
        sample,
        cal,
    }
}

#[test]
fn glued_orbits_shadow_every_segment() {
    let tol = Tolerances::default();
    let s = setup("quad_parabolic");
    let pts = s.om.points();
    let alpha = s.cal.metric.alpha;
    let eps = 0.1;
    let tparams = TransitionParams {
        restrict_to_e_alpha: Some((pts.clone(), alpha)),
        ..Default::default()
    };
    let tt = estimate_transition_time(&s.map, eps, &s.sample, &tparams, &tol).unwrap();
    let pool: Vec<_> = random_segments(&s.map, s.anchor, 400, 1..=10, 21, &tol)
        .unwrap()
        .into_iter()
        .filter(|seg| in_d_alpha(seg, &pts, alpha))
        .collect();
    for fam in pool.chunks_exact(3).take(8) {
        let g = glue(&s.map, fam, tt.n, eps, &tol).unwrap();
        assert_eq!(g.transition_time, tt.n);
        assert!(verify_shadowing(&s.map, &g, fam, eps));
        // Independent replay: iterate y once and compare every segment point.
        let total = g.offsets.last().unwrap() + fam.last().unwrap().len();
        let orbit = s.map.orbit(g.y, total);
        for (seg, &t) in fam.iter().zip(&g.offsets) {
            for (k, &x) in seg.points.iter().enumerate() {
                assert!((orbit[t + k] - x).norm() < eps);
            }
        }
        assert_eq!(g.offsets, gluing_offsets(fam, tt.n));
        // Shadowing at a scale far below the construction must be rejected.
        assert!(!verify_shadowing(&s.map, &g, fam, 1e-14));
    }
}

#[test]
fn transition_time_does_not_decrease_as_epsilon_shrinks() {
    let tol = Tolerances::default();
    let s = setup("quad_parabolic");
    let tparams = TransitionParams {
        restrict_to_e_alpha: Some((s.om.points(), s.cal.metric.alpha)),
        ..Default::default()
    };
    let ns: Vec<usize> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| estimate_transition_time(&s.map, eps, &s.sample, &tparams, &tol).unwrap().n)
        .collect();
    assert!(ns.windows(2).all(|w| w[0] <= w[1]), "{ns:?}");
}

#[test]
fn bowen_bound_is_uniform_in_segment_length() {
    let tol = Tolerances::default();
    for name in ["quad_parabolic", "blaschke_parabolic"] {
        let s = setup(name);
        let pts = s.om.points();
        let alpha = s.cal.metric.alpha;
        let r = s.cal.report.r_min_on_k;
        let eta = 0.5;
        let eps = 0.05_f64.min(alpha / 2.0);
        let params = DecompositionParams::new(alpha, eta).unwrap();
        let phi = Potential::geometric(1.0);
        let holder = holder_data(&s.map, &phi, Some(&s.cal.metric), &s.sample).unwrap();
        let mut bounds = Vec::new();
        for n in [10, 20, 30] {
            let segs = harvest_good_segments(&s.map, s.anchor, &pts, &params, n, 20, 5, &tol).unwrap();
            let rep = bowen_variation(&s.map, &phi, &segs, Some(&s.cal.metric), eps, 3, holder, r, eta, 5, &tol)
                .unwrap();
            assert!(rep.pass, "{name} n={n}: {} > {}", rep.sup_variation, rep.bound);
            bounds.push(rep.bound);
        }
        assert!(bounds.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn partners_follow_the_segment_and_contract() {
    let tol = Tolerances::default();
    let s = setup("blaschke_parabolic");
    let pts = s.om.points();
    let alpha = s.cal.metric.alpha;
    let r = s.cal.report.r_min_on_k;
    let eps = 0.05_f64.min(alpha / 2.0);
    let params = DecompositionParams::new(alpha, 0.5).unwrap();
    let segs = harvest_good_segments(&s.map, s.anchor, &pts, &params, 15, 10, 8, &tol).unwrap();
    for (i, seg) in segs.iter().enumerate() {
        let end = s.map.evaluate(seg.last());
        let rho = s.cal.metric.density(end).unwrap();
        let delta = Complex64::from_polar(0.5 * eps / rho, i as f64);
        let partner = shadow_partner(&s.map, seg, delta, &tol).unwrap();
        assert_eq!(partner.len(), seg.len() + 1);
        assert!((partner[seg.len()] - end - delta).norm() < 1e-12);
        for w in partner.windows(2) {
            assert!((s.map.evaluate(w[0]) - w[1]).norm() < 1e-9);
        }
        let rep = contraction_profile(&s.map, seg, &partner, Some(&s.cal.metric), r, 0.5, eps).unwrap();
        assert!(rep.violations.is_empty());
        assert!(contraction_profile(&s.map, seg, &partner[1..], Some(&s.cal.metric), r, 0.5, eps).is_err());
        // The Birkhoff sums of the pair stay within the uniform bound.
        let phi = Potential::geometric(1.0);
        let sx = birkhoff_sum_along(&s.map, &phi, &seg.points).unwrap();
        let sy = birkhoff_sum_along(&s.map, &phi, &partner[..seg.len()]).unwrap();
        assert!((sx - sy).abs() < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn greedy_nets_are_separated_and_covering(
        pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..300),
        spacing in 0.01..0.5f64,
    ) {
        let pts: Vec<Complex64> = pts.into_iter().map(|(x, y)| Complex64::new(x, y)).collect();
        let net = greedy_net(&pts, spacing);
        for (i, a) in net.iter().enumerate() {
            for b in &net[i + 1..] {
                prop_assert!((a - b).norm() >= spacing);
            }
        }
        for p in &pts {
            prop_assert!(net.iter().any(|q| (p - q).norm() < spacing) || net.contains(p));
        }
    }
}
