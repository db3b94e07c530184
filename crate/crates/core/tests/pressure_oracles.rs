use num_complex::Complex64;
use parabolic::periodic::omega;
use parabolic::potential::Potential;
use parabolic::pressure::{
    a_omega_vs_pressure, bowen_root, extrapolate, generic_anchor, log_sum_exp, partition_sum, pressure_periodic,
    pressure_separated, pressure_tree, pressure_ulam, Constraint, Extrapolation, GeometricTree, OracleConfig,
    PeriodicData, RootMode, UlamConfig,
};
use parabolic::registry::{example, EXAMPLES};
use parabolic::Tolerances;
use proptest::prelude::*;

const LOG2: f64 = std::f64::consts::LN_2;

fn small_ulam() -> UlamConfig {
    UlamConfig {
        cells_per_side: 64,
        sample_size: 20_000,
        burn_in: 50,
        max_iterations: 2000,
        seed: 3,
    }
}

#[test]
fn square_matches_the_closed_form_on_tree_and_periodic_oracles() {
    let tol = Tolerances::default();
    let f = example("square").unwrap();
    let one = Complex64::new(1.0, 0.0);
    let tree = GeometricTree::new(&f, one, 14, &tol).unwrap();
    let periodic = PeriodicData::new(&f, 10, &tol).unwrap();
    for t in [0.0, 0.5, 1.0, 2.0] {
        let want = (1.0 - t) * LOG2;
        // |(f^n)'| = 2^n on the circle, so every depth is exact up to rounding.
        assert!((tree.pressure(t, Extrapolation::Last).value - want).abs() < 1e-9);
        let p = periodic.pressure_geometric(t, Extrapolation::Last).value;
        // 2^n − 1 points of period dividing n: (1/n) log(1 − 2^−n) offset.
        assert!((p - want).abs() < 2e-4, "t={t}: {p}");
    }
}

#[test]
fn shift_covariance_holds_on_every_oracle() {
    let tol = Tolerances::default();
    let c = 0.25;
    for name in ["quad_parabolic", "blaschke_parabolic"] {
        let f = example(name).unwrap();
        let om = omega(&f, 4, &tol).unwrap();
        let anchor = generic_anchor(&f, &om, &tol).unwrap();
        let phi = Potential::geometric(0.5);
        let psi = phi.shifted(c);
        for ex in [Extrapolation::Last, Extrapolation::LogCorrected { window: 5 }] {
            let a = pressure_tree(&f, &phi, anchor, 12, ex, &tol).unwrap().value;
            let b = pressure_tree(&f, &psi, anchor, 12, ex, &tol).unwrap().value;
            assert!((b - a - c).abs() < 1e-9, "tree {name} {ex:?}");
            let a = pressure_periodic(&f, &phi, 8, ex, &tol).unwrap().value;
            let b = pressure_periodic(&f, &psi, 8, ex, &tol).unwrap().value;
            assert!((b - a - c).abs() < 1e-9, "periodic {name} {ex:?}");
        }
        let a = pressure_ulam(&f, &phi, anchor, &small_ulam(), &tol).unwrap().value;
        let b = pressure_ulam(&f, &psi, anchor, &small_ulam(), &tol).unwrap().value;
        assert!((b - a - c).abs() < 1e-9, "ulam {name}");
        let pts = om.points();
        let a = pressure_separated(&f, &phi, anchor, 8, 0.1, Constraint::All, &pts, Extrapolation::Last, &tol)
            .unwrap()
            .value;
        let b = pressure_separated(&f, &psi, anchor, 8, 0.1, Constraint::All, &pts, Extrapolation::Last, &tol)
            .unwrap()
            .value;
        assert!((b - a - c).abs() < 1e-9, "separated {name}");
    }
}

#[test]
fn geometric_pressure_is_convex_and_nonincreasing_in_t() {
    let tol = Tolerances::default();
    for name in ["quad_parabolic", "blaschke_parabolic", "square"] {
        let f = example(name).unwrap();
        let om = omega(&f, 4, &tol).unwrap();
        let anchor = generic_anchor(&f, &om, &tol).unwrap();
        let tree = GeometricTree::new(&f, anchor, 14, &tol).unwrap();
        let ts: Vec<f64> = (0..=24).map(|k| k as f64 / 12.0).collect();
        // A log-sum-exp of affine functions of t: exactly convex at every depth.
        let last: Vec<f64> = ts.iter().map(|&t| tree.pressure(t, Extrapolation::Last).value).collect();
        for w in last.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] > -1e-12, "{name}");
        }
        // The log-corrected fit is only well behaved from the default anchor;
        // from the generic one it overshoots the flat tail.
        let anchor = OracleConfig::default().anchor_for(&f, &om, &tol).unwrap();
        let tree = GeometricTree::new(&f, anchor, 14, &tol).unwrap();
        let corrected: Vec<f64> = ts
            .iter()
            .map(|&t| tree.pressure(t, Extrapolation::LogCorrected { window: 7 }).value)
            .collect();
        for w in corrected.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] > -0.01, "{name} {corrected:?}");
        }
        for w in corrected.windows(2) {
            assert!(w[1] - w[0] < 0.01, "{name} {corrected:?}");
        }
    }
}

#[test]
fn every_registry_map_has_entropy_log_two() {
    let tol = Tolerances::default();
    for e in EXAMPLES {
        let f = example(e.name).unwrap();
        let anchor = Complex64::new(0.3, 0.1);
        // Trees rooted anywhere off the exceptional set have 2^n leaves.
        let p = pressure_tree(&f, &Potential::constant(0.0), anchor, 10, Extrapolation::Last, &tol).unwrap();
        assert!((p.value - LOG2).abs() < 1e-12, "{}", e.name);
        let q = pressure_periodic(&f, &Potential::constant(0.0), 10, Extrapolation::Last, &tol).unwrap();
        assert!((q.value - LOG2).abs() < 2e-3, "{}: {}", e.name, q.value);
    }
}

#[test]
fn restricted_classes_partition_the_candidates() {
    let tol = Tolerances::default();
    let f = example("quad_parabolic").unwrap();
    let om = omega(&f, 4, &tol).unwrap();
    let pts = om.points();
    let anchor = generic_anchor(&f, &om, &tol).unwrap();
    let tree = f.preimage_tree(anchor, 9, &tol).unwrap();
    let leaves: Vec<Complex64> = tree.level(9).iter().map(|n| n.z).collect();
    let phi = Potential::geometric(0.5);
    for eta in [0.2, 0.5, 0.8] {
        let count = |constraint| partition_sum(&f, &phi, &leaves, 9, 0.1, constraint, &pts).unwrap();
        let all = count(Constraint::All);
        let good = count(Constraint::Good { alpha: 0.1, eta });
        let bad = count(Constraint::Bad { alpha: 0.1, eta });
        let d = count(Constraint::DAlpha { alpha: 0.1 });
        assert_eq!(all.admitted, leaves.len());
        // G(η) and B(η) are disjoint, and G(η) ⊆ D(α).
        assert!(good.admitted + bad.admitted <= all.admitted);
        assert!(good.admitted <= d.admitted);
        assert!(all.selected <= all.admitted);
    }
}

#[test]
fn gap_and_root_on_reference_maps() {
    let tol = Tolerances::default();
    let config = OracleConfig::default();
    let square = example("square").unwrap();
    let om = omega(&square, 4, &tol).unwrap();
    let cfg = OracleConfig {
        anchor: Some(Complex64::new(1.0, 0.0)),
        ..config.clone()
    };
    let root = bowen_root(&square, &om, &cfg, &tol).unwrap();
    assert_eq!(root.mode, RootMode::Crossing);
    assert!((root.h - 1.0).abs() < 1e-6, "{}", root.h);

    let quad = example("quad_parabolic").unwrap();
    let om = omega(&quad, 4, &tol).unwrap();
    let report = a_omega_vs_pressure(&quad, &Potential::geometric(0.5), &om, &config, &tol).unwrap();
    assert!(report.a.abs() < 1e-12);
    assert!(report.gap);
    // Past the Bowen root P sits on its flat tail at A = 0.
    let flat = a_omega_vs_pressure(&quad, &Potential::geometric(2.0), &om, &config, &tol).unwrap();
    assert!(!flat.gap, "{}", flat.p);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn log_sum_exp_matches_the_naive_sum(values in prop::collection::vec(-50.0..50.0f64, 1..3000)) {
        let naive = values.iter().map(|v| v.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&values) - naive).abs() < 1e-10 * naive.abs().max(1.0));
        let shifted: Vec<f64> = values.iter().map(|v| v + 700.0).collect();
        prop_assert!((log_sum_exp(&shifted) - 700.0 - naive).abs() < 1e-9 * naive.abs().max(1.0));
    }

    #[test]
    fn extrapolation_is_exact_on_model_sequences(p in -2.0..2.0f64, beta in -3.0..3.0f64, c in -5.0..5.0f64, first_k in 1usize..4) {
        let affine: Vec<f64> = (first_k..first_k + 12).map(|k| k as f64 * p + c).collect();
        prop_assert!((extrapolate(&affine, first_k, Extrapolation::Ratio).0 - p).abs() < 1e-9);
        let with_log: Vec<f64> = (first_k..first_k + 12)
            .map(|k| k as f64 * p + beta * (k as f64).ln() + c)
            .collect();
        let (v, tail) = extrapolate(&with_log, first_k, Extrapolation::LogCorrected { window: 7 });
        prop_assert!((v - p).abs() < 1e-8);
        prop_assert!(tail < 1e-8);
        let pure: Vec<f64> = (first_k..first_k + 12).map(|k| k as f64 * p).collect();
        prop_assert!((extrapolate(&pure, first_k, Extrapolation::Last).0 - p).abs() < 1e-12);
    }
}

#[test]
fn tree_estimates_do_not_depend_on_the_generic_anchor() {
    use parabolic::periodic::find_periodic_points;
    let tol = Tolerances::default();
    for (name, ts) in [("square", &[0.0, 0.5, 1.0, 2.0][..]), ("quad_parabolic", &[0.0, 0.5][..])] {
        let f = example(name).unwrap();
        let om = omega(&f, 4, &tol).unwrap();
        let mut anchors = vec![generic_anchor(&f, &om, &tol).unwrap()];
        anchors.extend(find_periodic_points(&f, 3, &tol).unwrap().iter().flat_map(|o| o.points.clone()));
        for &t in ts {
            let values: Vec<f64> = anchors
                .iter()
                .map(|&w| pressure_tree(&f, &Potential::geometric(t), w, 12, Extrapolation::Last, &tol).unwrap().value)
                .collect();
            let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 0.02, "{name} t={t}: {values:?}");
        }
    }
}
