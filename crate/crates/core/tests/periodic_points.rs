use num_complex::Complex64;
use parabolic::periodic::{
    a_omega, classify, cycle_multiplier, find_periodic_points, fixed_points_of_iterate, omega, Classification,
};
use parabolic::potential::Potential;
use parabolic::registry::example;
use parabolic::{is_infinite, RationalMap, Tolerances};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn multiplier(map: &RationalMap, z: Complex64) -> Complex64 {
    if is_infinite(z) {
        map.multiplier_at_infinity().unwrap()
    } else {
        map.derivative(z).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    /// Holomorphic fixed point formula: Σ 1/(1 − λ) = 1 over the fixed points
    /// of a rational map without multiplier 1.
    #[test]
    fn fixed_point_index_sums_to_one(v in prop::collection::vec(-1.0..1.0f64, 5)) {
        let tol = Tolerances::default();
        let map = RationalMap::new(
            vec![c(v[0], v[1]), c(v[2], 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(v[3], v[4])],
        );
        prop_assume!(map.is_ok());
        let map = map.unwrap();
        let fixed = fixed_points_of_iterate(&map, 1, &tol).unwrap();
        prop_assume!(fixed.iter().all(|p| p.multiplicity == 1));
        let lambdas: Vec<Complex64> = fixed.iter().map(|p| multiplier(&map, p.z)).collect();
        prop_assume!(lambdas.iter().all(|l| (l - 1.0).norm() > 1e-3));
        let sum: Complex64 = lambdas.iter().map(|l| (c(1.0, 0.0) - l).inv()).sum();
        prop_assert!((sum - 1.0).norm() < 1e-6, "index sum {}", sum);
    }

    #[test]
    fn fixed_points_of_iterates_count_with_multiplicity(cr in -1.0..0.2f64, ci in -0.6..0.6f64, n in 1usize..5) {
        let tol = Tolerances::default();
        let map = RationalMap::new(vec![c(cr, ci), c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let fixed = fixed_points_of_iterate(&map, n, &tol).unwrap();
        let total: usize = fixed.iter().map(|p| p.multiplicity).sum();
        prop_assert_eq!(total, (1usize << n) + 1);
        for p in fixed.iter().filter(|p| !is_infinite(p.z)) {
            prop_assert!((map.iterate(p.z, n) - p.z).norm() < 1e-6 * (1.0 + p.z.norm()));
        }
    }
}

#[test]
fn cycle_multipliers_match_the_chain_rule() {
    let tol = Tolerances::default();
    let map = example("quad_parabolic").unwrap();
    for n in 2..=4 {
        for o in find_periodic_points(&map, n, &tol).unwrap() {
            if is_infinite(o.points[0]) {
                continue;
            }
            let chain = map.iterate_derivative(o.points[0], n).unwrap();
            assert!((cycle_multiplier(&map, &o.points).unwrap() - chain).norm() < 1e-8 * chain.norm().max(1.0));
            assert!((o.multiplier - chain).norm() < 1e-8 * chain.norm().max(1.0));
        }
    }
}

#[test]
fn square_periodic_points_are_roots_of_unity() {
    let tol = Tolerances::default();
    let map = example("square").unwrap();
    for n in 1..=5 {
        for o in find_periodic_points(&map, n, &tol).unwrap() {
            for z in o.points.iter().filter(|z| !is_infinite(**z) && z.norm() > 0.5) {
                // z^(2^n - 1) = 1 with multiplier 2^n.
                assert!((z.norm() - 1.0).abs() < 1e-10);
                assert!((o.multiplier.norm() - 2f64.powi(n as i32)).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn chebyshev_fixed_points_are_real_and_repelling() {
    let tol = Tolerances::default();
    let map = example("cheb").unwrap();
    let finite: Vec<_> = find_periodic_points(&map, 1, &tol)
        .unwrap()
        .into_iter()
        .filter(|o| !is_infinite(o.points[0]))
        .collect();
    assert_eq!(finite.len(), 2);
    for o in finite {
        let z = o.points[0];
        // Fixed points 2 and −1 with multipliers 4 and −2.
        assert!(z.im.abs() < 1e-12);
        assert!((o.multiplier - 2.0 * z).norm() < 1e-10);
        assert_eq!(o.classification, Classification::Repelling);
    }
}

#[test]
fn registry_omega_sets() {
    let tol = Tolerances::default();
    for (name, expected) in [
        ("square", None),
        ("cheb", None),
        ("quad_parabolic", Some(c(0.5, 0.0))),
        ("blaschke_parabolic", Some(c(1.0, 0.0))),
    ] {
        let om = omega(&example(name).unwrap(), 4, &tol).unwrap();
        match expected {
            None => assert!(om.is_empty(), "{name}"),
            Some(p) => {
                assert_eq!(om.points().len(), 1, "{name}");
                assert!((om.points()[0] - p).norm() < 1e-7, "{name}");
                assert_eq!(om.orbits[0].classification, Classification::Parabolic { p: 0, q: 1 });
            }
        }
    }
}

#[test]
fn obstruction_vanishes_for_geometric_potentials() {
    let tol = Tolerances::default();
    for name in ["quad_parabolic", "blaschke_parabolic"] {
        let map = example(name).unwrap();
        let om = omega(&map, 4, &tol).unwrap();
        for t in [0.0, 0.5, 0.9, 3.0] {
            assert!(a_omega(&map, &om, &Potential::geometric(t)).unwrap().abs() < 1e-9);
        }
        let a = a_omega(&map, &om, &Potential::constant(0.3)).unwrap();
        assert!((a - 0.3).abs() < 1e-15);
    }
}

#[test]
fn classification_of_roots_of_unity() {
    let third = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    assert_eq!(classify(third, 12, 1e-8), Classification::Parabolic { p: 1, q: 3 });
    let golden = Complex64::from_polar(1.0, std::f64::consts::PI * (5f64.sqrt() - 1.0));
    assert_eq!(classify(golden, 12, 1e-8), Classification::IrrationallyIndifferent);
    assert_eq!(classify(c(0.0, 0.0), 12, 1e-8), Classification::Superattracting);
}
