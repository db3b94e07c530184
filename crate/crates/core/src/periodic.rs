//! Periodic points, multipliers and stability classes, the parabolic set Ω,
//! the obstruction A(Ω, φ) and reduction to an iterate with fixed parabolic points.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::poly::{self, AberthOptions};
use crate::potential::Potential;
use crate::rational_map::{is_infinite, RationalMap, INFINITY};

/// Generic anchor for the initial-guess tree; avoids the critical values of
/// every registry map.
const GUESS_ANCHOR: Complex64 = Complex64::new(0.5377, 0.3117);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    Superattracting,
    Attracting,
    Repelling,
    Parabolic { p: u32, q: u32 },
    IrrationallyIndifferent,
}

impl Classification {
    pub fn is_parabolic(&self) -> bool {
        matches!(self, Classification::Parabolic { .. })
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Superattracting => write!(f, "superattracting"),
            Classification::Attracting => write!(f, "attracting"),
            Classification::Repelling => write!(f, "repelling"),
            Classification::Parabolic { p, q } => write!(f, "parabolic({p}/{q})"),
            Classification::IrrationallyIndifferent => write!(f, "irrationally-indifferent"),
        }
    }
}

/// Tests are applied in order; the first match wins.
pub fn classify(multiplier: Complex64, q_max: u32, tol: f64) -> Classification {
    let m = multiplier.norm();
    if m < tol {
        return Classification::Superattracting;
    }
    if m < 1.0 - tol {
        return Classification::Attracting;
    }
    if m > 1.0 + tol {
        return Classification::Repelling;
    }
    let theta = (multiplier.arg() / (2.0 * std::f64::consts::PI)).rem_euclid(1.0);
    for q in 1..=q_max.max(1) {
        let p = (theta * q as f64).round();
        if (theta - p / q as f64).abs() <= tol {
            return Classification::Parabolic {
                p: (p as u32) % q,
                q,
            };
        }
    }
    Classification::IrrationallyIndifferent
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// The cycle, starting at its lexicographically smallest point.
    pub points: Vec<Complex64>,
    pub period: usize,
    pub multiplier: Complex64,
    pub classification: Classification,
}

/// A fixed point of f^n with the number of solver roots that merged into it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub z: Complex64,
    pub multiplicity: usize,
}

/// Newton quotient F/F' of F = A_n - z B_n, where (A_n, B_n) is the homogeneous
/// n-fold iterate at (z, 1). The common rescaling at every step leaves the quotient unchanged.
fn iterate_newton_quotient(map: &RationalMap, z: Complex64, n: usize) -> Option<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (mut a, mut b, mut da, mut db) = (z, one, one, zero);
    for _ in 0..n {
        let [p, q, dp, dq] = map.homogeneous_with_derivative(a, b, da, db);
        let s = p.norm().max(q.norm());
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let inv = 1.0 / s;
        a = p * inv;
        b = q * inv;
        da = dp * inv;
        db = dq * inv;
    }
    let f = a - z * b;
    let df = da - b - z * db;
    if df.norm() == 0.0 || !df.is_finite() {
        return None;
    }
    let r = f / df;
    r.is_finite().then_some(r)
}

/// Multiplicity of infinity as a fixed point of f^n (0 when not fixed).
fn infinity_multiplicity(map: &RationalMap, n: usize) -> Result<usize> {
    if !is_infinite(map.iterate(INFINITY, n)) {
        return Ok(0);
    }
    let period = (1..=n)
        .find(|&k| is_infinite(map.iterate(INFINITY, k)))
        .unwrap_or(n);
    let cycle = map.orbit(INFINITY, period);
    let lambda = cycle_multiplier(map, &cycle)?.powu((n / period) as u32);
    if (lambda - 1.0).norm() > 1e-6 {
        return Ok(1);
    }
    // Parabolic at infinity: read the deficiency from the growth of |F| on a large circle.
    let big = 1e3_f64;
    let mut estimate = 0.0;
    for k in 0..4 {
        let dir = Complex64::from_polar(1.0, 0.7 + k as f64 * 1.3);
        let f = |r: f64| {
            let z = dir * r;
            let (a, b) = homogeneous_iterate(map, z, n);
            (a - z * b).norm().ln()
        };
        estimate += (f(big * 10.0) - f(big)) / 10f64.ln();
    }
    let degree = (estimate / 4.0).round() as i64;
    let full = map.degree().pow(n as u32) as i64 + 1;
    Ok((full - degree).max(1) as usize)
}

/// (A_n, B_n) at (z, 1) without rescaling.
fn homogeneous_iterate(map: &RationalMap, z: Complex64, n: usize) -> (Complex64, Complex64) {
    let (mut a, mut b) = (z, Complex64::new(1.0, 0.0));
    for _ in 0..n {
        let (p, q) = map.homogeneous(a, b);
        a = p;
        b = q;
    }
    (a, b)
}

/// Derivative of the return map along a cycle. Cycles meeting infinity or a
/// pole are handled in the chart u = 1/(z - c) for a c away from the cycle.
pub fn cycle_multiplier(map: &RationalMap, cycle: &[Complex64]) -> Result<Complex64> {
    let direct: Result<Complex64> = cycle
        .iter()
        .try_fold(Complex64::new(1.0, 0.0), |acc, &z| Ok(acc * map.derivative(z)?));
    if let Ok(m) = direct {
        if m.is_finite() {
            return Ok(m);
        }
    }
    let candidates = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.31, 0.17),
        Complex64::new(-0.6, 0.4),
        Complex64::new(1.3, -0.9),
        Complex64::new(-2.1, -1.7),
    ];
    let c = candidates
        .iter()
        .copied()
        .find(|&c| {
            cycle
                .iter()
                .all(|&z| is_infinite(z) || (z - c).norm() > 0.1)
        })
        .ok_or(Error::PoleOfDerivative(cycle[0]))?;
    let g = map.conjugate_by_inversion_about(c);
    cycle.iter().try_fold(Complex64::new(1.0, 0.0), |acc, &z| {
        Ok(acc * g.derivative(RationalMap::inversion_chart(c, z))?)
    })
}

/// All fixed points of f^n on the sphere, with cluster multiplicities.
/// Infinity, when fixed, is listed last.
pub fn fixed_points_of_iterate(
    map: &RationalMap,
    n: usize,
    tol: &Tolerances,
) -> Result<Vec<FixedPoint>> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be >= 1".into()));
    }
    let full = (map.degree() as f64).powi(n as i32) + 1.0;
    if full > tol.root_degree_budget as f64 {
        return Err(Error::BudgetExceeded {
            what: "periodic-point polynomial degree",
            needed: full.min(usize::MAX as f64) as usize,
            budget: tol.root_degree_budget,
        });
    }
    let m_inf = infinity_multiplicity(map, n)?;
    let degree = full as usize - m_inf;

    let mut guesses = initial_guesses(map, n, degree, tol);
    dedupe_guesses(&mut guesses);
    let run = poly::aberth_implicit(
        |z| iterate_newton_quotient(map, z, n),
        guesses,
        AberthOptions::default(),
    );
    let roots = run.roots;
    let radii: Vec<f64> = run
        .newton_steps
        .iter()
        .map(|&s| if s.is_finite() { degree as f64 * s } else { 0.0 })
        .collect();
    // A root of multiplicity m is only resolved to about eps^(1/m), and the
    // Newton quotient can vanish identically there. Two nearby roots are the
    // same root when their midpoint is still a fixed point to rounding level;
    // a bare distance threshold would merge distinct points of large
    // multiplier, which can sit within 1e-7 of each other.
    let residual = |z: Complex64| (map.iterate(z, n) - z).norm() / z.norm().max(1.0);
    let groups = poly::cluster_by(roots.len(), |i, j| {
        let d = (roots[i] - roots[j]).norm();
        let scale = roots[i].norm().max(1.0);
        d <= 1e-4 * scale
            && (d <= radii[i] + radii[j] || residual((roots[i] + roots[j]) * 0.5) <= 1e-10)
    });
    let centroids: Vec<Complex64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| roots[i]).sum::<Complex64>() / g.len() as f64)
        .collect();
    let mut out: Vec<FixedPoint> = groups
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let centroid = centroids[k];
            let z = if g.len() == 1 {
                polish_periodic(map, centroid, n)
            } else {
                let spread = g
                    .iter()
                    .map(|&i| (roots[i] - centroid).norm())
                    .fold(0.0, f64::max);
                let gap = centroids
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &c)| (c - centroid).norm())
                    .fold(f64::INFINITY, f64::min);
                let radius = (1e-3 * centroid.norm().max(1.0)).min(0.4 * gap).max(10.0 * spread);
                contour_centroid(map, n, centroid, radius, g.len()).unwrap_or(centroid)
            };
            FixedPoint {
                z,
                multiplicity: g.len(),
            }
        })
        .collect();
    for p in &out {
        let residual = (map.iterate(p.z, n) - p.z).norm();
        if !(residual < 1e-6 * p.z.norm().max(1.0)) {
            return Err(Error::RootSolver {
                degree,
                iterations: run.iterations,
                coefficients: format!("implicit f^{n}(z) - z; residual {residual:e} at {}", p.z),
            });
        }
    }
    out.sort_by(|a, b| poly::lex_cmp(&a.z, &b.z));
    if m_inf > 0 {
        out.push(FixedPoint {
            z: INFINITY,
            multiplicity: m_inf,
        });
    }
    Ok(out)
}

/// Mean of the roots of F inside |z - c| = radius by the argument principle,
/// (1/2πi)∮ z F'/F dz divided by the root count. On the circle F is far above
/// rounding level, so this resolves a multiple root to full precision.
fn contour_centroid(
    map: &RationalMap,
    n: usize,
    c: Complex64,
    radius: f64,
    expected: usize,
) -> Option<Complex64> {
    const NODES: usize = 64;
    let mut count = Complex64::new(0.0, 0.0);
    let mut moment = Complex64::new(0.0, 0.0);
    for k in 0..NODES {
        let w = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / NODES as f64);
        let z = c + w;
        let q = iterate_newton_quotient(map, z, n)?;
        let term = w / q;
        count += term;
        moment += term * w;
    }
    count /= NODES as f64;
    moment /= NODES as f64;
    if (count.re - expected as f64).abs() > 0.1 || count.im.abs() > 0.1 {
        return None;
    }
    Some(c + moment / expected as f64)
}

fn initial_guesses(map: &RationalMap, n: usize, degree: usize, tol: &Tolerances) -> Vec<Complex64> {
    let mut anchor = GUESS_ANCHOR;
    let mut leaves = Vec::new();
    for _ in 0..4 {
        match map.preimage_tree(anchor, n, tol) {
            Ok(tree) => {
                leaves = tree.leaves().into_iter().filter(|z| z.is_finite()).collect();
                break;
            }
            Err(_) => anchor += Complex64::new(1e-3, 7e-4),
        }
    }
    leaves.truncate(degree);
    if leaves.len() < degree {
        let radius = leaves.iter().map(|z| z.norm()).fold(1.0, f64::max) * 1.3 + 0.5;
        leaves.extend(poly::circle_guesses(
            degree - leaves.len(),
            radius,
            Complex64::new(0.0, 0.0),
        ));
    }
    leaves
}

/// Aberth needs pairwise distinct starting points.
fn dedupe_guesses(guesses: &mut [Complex64]) {
    let mut order: Vec<usize> = (0..guesses.len()).collect();
    order.sort_by(|&a, &b| poly::lex_cmp(&guesses[a], &guesses[b]));
    for w in 1..order.len() {
        let (i, j) = (order[w - 1], order[w]);
        if (guesses[i] - guesses[j]).norm() < 1e-9 {
            guesses[j] += Complex64::new(1e-6 * w as f64, 1.3e-6 * w as f64);
        }
    }
}

/// Newton on f^n(z) - z by forward iteration; keeps the best point seen.
fn polish_periodic(map: &RationalMap, z0: Complex64, n: usize) -> Complex64 {
    let residual = |z: Complex64| (map.iterate(z, n) - z).norm();
    let mut best = z0;
    let mut best_res = residual(z0);
    let mut z = z0;
    for _ in 0..6 {
        let d = match map.iterate_derivative(z, n) {
            Ok(d) => d,
            Err(_) => break,
        };
        let g = map.iterate(z, n) - z;
        let denom = d - 1.0;
        if denom.norm() == 0.0 || !g.is_finite() {
            break;
        }
        z -= g / denom;
        let r = residual(z);
        if !(r < best_res) {
            break;
        }
        best = z;
        best_res = r;
        if r == 0.0 {
            break;
        }
    }
    best
}

fn divisors_below(n: usize) -> Vec<usize> {
    (1..n).filter(|k| n % k == 0).collect()
}

fn same_point(a: Complex64, b: Complex64, tol: f64) -> bool {
    match (is_infinite(a), is_infinite(b)) {
        (true, true) => true,
        (false, false) => (a - b).norm() < tol * a.norm().max(1.0),
        _ => false,
    }
}

/// All cycles of exact period n, one entry per cycle.
pub fn find_periodic_points(
    map: &RationalMap,
    n: usize,
    tol: &Tolerances,
) -> Result<Vec<PeriodicOrbit>> {
    let fixed = fixed_points_of_iterate(map, n, tol)?;
    let divisors = divisors_below(n);
    let exact: Vec<Complex64> = fixed
        .iter()
        .map(|p| p.z)
        .filter(|&z| {
            divisors
                .iter()
                .all(|&k| !same_point(map.iterate(z, k), z, tol.divisor_match))
        })
        .collect();
    let mut used = vec![false; exact.len()];
    let mut orbits = Vec::new();
    for i in 0..exact.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut points = vec![exact[i]];
        let mut x = exact[i];
        for _ in 1..n {
            x = map.evaluate(x);
            // Prefer the solver's point; it is not degraded by forward error growth.
            let hit = (0..exact.len()).find(|&j| !used[j] && same_point(exact[j], x, 1e-6));
            if let Some(j) = hit {
                used[j] = true;
                x = exact[j];
            }
            points.push(x);
        }
        // Rotate so the cycle starts at its lexicographically smallest point.
        let start = (0..n)
            .min_by(|&a, &b| cycle_key_cmp(points[a], points[b]))
            .unwrap_or(0);
        points.rotate_left(start);
        let multiplier = cycle_multiplier(map, &points)?;
        orbits.push(PeriodicOrbit {
            classification: classify(multiplier, tol.q_max, tol.root_of_unity),
            points,
            period: n,
            multiplier,
        });
    }
    orbits.sort_by(|a, b| cycle_key_cmp(a.points[0], b.points[0]));
    Ok(orbits)
}

/// Lexicographic order with infinity after every finite point.
fn cycle_key_cmp(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    match (is_infinite(a), is_infinite(b)) {
        (false, false) => poly::lex_cmp(&a, &b),
        (true, true) => std::cmp::Ordering::Equal,
        (true, false) => std::cmp::Ordering::Greater,
        (false, true) => std::cmp::Ordering::Less,
    }
}

/// Parabolic cycles of period at most `scope`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OmegaSet {
    pub orbits: Vec<PeriodicOrbit>,
    pub scope: usize,
}

impl OmegaSet {
    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    /// Every point of every parabolic cycle.
    pub fn points(&self) -> Vec<Complex64> {
        self.orbits.iter().flat_map(|o| o.points.iter().copied()).collect()
    }

    pub fn require_nonempty(&self) -> Result<&Self> {
        if self.is_empty() {
            Err(Error::NotParabolic { scope: self.scope })
        } else {
            Ok(self)
        }
    }

    /// Euclidean distance from z to the nearest point of Ω (infinite when empty).
    pub fn distance(&self, z: Complex64) -> f64 {
        self.orbits
            .iter()
            .flat_map(|o| o.points.iter())
            .map(|&w| (z - w).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn omega(map: &RationalMap, n_max: usize, tol: &Tolerances) -> Result<OmegaSet> {
    let mut orbits = Vec::new();
    for n in 1..=n_max {
        orbits.extend(
            find_periodic_points(map, n, tol)?
                .into_iter()
                .filter(|o| o.classification.is_parabolic()),
        );
    }
    Ok(OmegaSet {
        orbits,
        scope: n_max,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreconditionReport {
    /// Smallest distance from a finite critical point to the sample.
    pub critical_clearance: f64,
    pub clearance_threshold: f64,
    pub clearance_ok: bool,
    pub omega_nonempty: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Parabolic hypotheses: no critical point on J (measured against the sample)
/// and at least one parabolic cycle.
pub fn check_parabolic_preconditions(
    map: &RationalMap,
    julia_sample: &[Complex64],
    omega: &OmegaSet,
    clearance: f64,
    tol: &Tolerances,
) -> Result<PreconditionReport> {
    if julia_sample.is_empty() {
        return Err(Error::InvalidArgument("empty Julia sample".into()));
    }
    let critical = map.critical_points(tol)?;
    let critical_clearance = critical
        .iter()
        .filter(|c| !is_infinite(**c))
        .map(|&c| {
            julia_sample
                .par_iter()
                .map(|&z| (z - c).norm())
                .reduce(|| f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let clearance_ok = critical_clearance >= clearance;
    let omega_nonempty = !omega.is_empty();
    let mut notes = Vec::new();
    if !clearance_ok {
        notes.push(format!(
            "a critical point lies within {critical_clearance:.3e} of the Julia sample"
        ));
    }
    if !omega_nonempty {
        notes.push(format!(
            "not parabolic: no parabolic cycle of period <= {}",
            omega.scope
        ));
    }
    Ok(PreconditionReport {
        critical_clearance,
        clearance_threshold: clearance,
        clearance_ok,
        omega_nonempty,
        pass: clearance_ok && omega_nonempty,
        notes,
    })
}

/// Largest Birkhoff average of φ over the parabolic cycles.
pub fn a_omega(map: &RationalMap, omega: &OmegaSet, potential: &Potential) -> Result<f64> {
    omega.require_nonempty()?;
    let mut best = f64::NEG_INFINITY;
    for orbit in &omega.orbits {
        let mut sum = 0.0;
        for (i, &z) in orbit.points.iter().enumerate() {
            sum += potential.eval(map, z).map_err(|e| Error::OrbitEvaluation {
                index: i,
                source: Box::new(e),
            })?;
        }
        best = best.max(sum / orbit.period as f64);
    }
    Ok(best)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest k making every parabolic point fixed by f^k with multiplier 1.
pub fn reduction_index(omega: &OmegaSet) -> usize {
    omega.orbits.iter().fold(1, |k, o| {
        let q = match o.classification {
            Classification::Parabolic { q, .. } => q as usize,
            _ => 1,
        };
        let m = o.period * q;
        k / gcd(k, m) * m
    })
}

/// (k, f^k) with k from [`reduction_index`]; fails above the composition budget.
pub fn reduce_to_fixed(
    map: &RationalMap,
    omega: &OmegaSet,
    tol: &Tolerances,
) -> Result<(usize, RationalMap)> {
    let k = reduction_index(omega);
    Ok((k, map.iterate_map(k, tol.compose_degree_budget)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square() -> RationalMap {
        RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap()
    }

    fn quad() -> RationalMap {
        RationalMap::polynomial(&[0.25, 0.0, 1.0]).unwrap()
    }

    fn blaschke() -> RationalMap {
        RationalMap::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
            vec![c(3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(c(2.0, 0.0), 12, 1e-8), Classification::Repelling);
        assert_eq!(
            classify(c(1.0, 0.0), 12, 1e-8),
            Classification::Parabolic { p: 0, q: 1 }
        );
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert_eq!(classify(w, 12, 1e-8), Classification::Parabolic { p: 1, q: 3 });
        assert_eq!(classify(c(0.0, 0.0), 12, 1e-8), Classification::Superattracting);
        assert_eq!(classify(c(0.5, 0.0), 12, 1e-8), Classification::Attracting);
        let irr = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.6180339887);
        assert_eq!(classify(irr, 12, 1e-8), Classification::IrrationallyIndifferent);
    }

    #[test]
    fn square_fixed_points() {
        let tol = Tolerances::default();
        let orbits = find_periodic_points(&square(), 1, &tol).unwrap();
        assert_eq!(orbits.len(), 3);
        assert!(orbits[0].points[0].norm() < 1e-12);
        assert!(orbits[0].multiplier.norm() < 1e-12);
        assert!((orbits[1].points[0] - 1.0).norm() < 1e-12);
        assert!((orbits[1].multiplier - 2.0).norm() < 1e-12);
        assert!(is_infinite(orbits[2].points[0]));
        assert!(orbits[2].multiplier.norm() < 1e-12);
    }

    #[test]
    fn quad_double_fixed_point() {
        let tol = Tolerances::default();
        let orbits = find_periodic_points(&quad(), 1, &tol).unwrap();
        let finite: Vec<_> = orbits.iter().filter(|o| !is_infinite(o.points[0])).collect();
        assert_eq!(finite.len(), 1);
        assert!((finite[0].points[0] - 0.5).norm() < 1e-10);
        assert_eq!(finite[0].classification, Classification::Parabolic { p: 0, q: 1 });
    }

    #[test]
    fn blaschke_triple_fixed_point() {
        let tol = Tolerances::default();
        let fixed = fixed_points_of_iterate(&blaschke(), 1, &tol).unwrap();
        assert_eq!(fixed.len(), 1);
        assert_eq!(fixed[0].multiplicity, 3);
        assert!((fixed[0].z - 1.0).norm() < 1e-10);
        let om = omega(&blaschke(), 3, &tol).unwrap();
        assert_eq!(om.orbits.len(), 1);
        assert!((om.orbits[0].multiplier - 1.0).norm() < 1e-8);
    }

    #[test]
    fn period_two_of_square() {
        let tol = Tolerances::default();
        let orbits = find_periodic_points(&square(), 2, &tol).unwrap();
        // z^4 = z minus the fixed points: the primitive cube roots of unity, one cycle.
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].points.len(), 2);
        assert!((orbits[0].multiplier - 4.0).norm() < 1e-9);
    }

    #[test]
    fn cycle_counts_match_moebius_formula() {
        let tol = Tolerances::default();
        // Cycles of exact period n for a degree-2 polynomial: (1/n) sum mu(n/k) 2^k.
        for (n, expected) in [(3, 2), (4, 3), (5, 6), (6, 9)] {
            let orbits = find_periodic_points(&square(), n, &tol).unwrap();
            assert_eq!(orbits.len(), expected, "period {n}");
            for o in &orbits {
                assert!((square().iterate(o.points[0], n) - o.points[0]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn omega_examples() {
        let tol = Tolerances::default();
        assert!(omega(&square(), 4, &tol).unwrap().is_empty());
        let om = omega(&quad(), 4, &tol).unwrap();
        assert_eq!(om.orbits.len(), 1);
        assert!(matches!(
            OmegaSet { orbits: vec![], scope: 4 }.require_nonempty(),
            Err(Error::NotParabolic { scope: 4 })
        ));
    }

    #[test]
    fn reduction_index_examples() {
        let orbit = |period, p, q| PeriodicOrbit {
            points: vec![c(0.0, 0.0); period],
            period,
            multiplier: c(1.0, 0.0),
            classification: Classification::Parabolic { p, q },
        };
        let om = |orbits| OmegaSet { orbits, scope: 6 };
        assert_eq!(reduction_index(&om(vec![orbit(1, 0, 1)])), 1);
        assert_eq!(reduction_index(&om(vec![orbit(2, 0, 1)])), 2);
        assert_eq!(reduction_index(&om(vec![orbit(1, 1, 3)])), 3);
        assert_eq!(reduction_index(&om(vec![orbit(2, 0, 1), orbit(1, 1, 3)])), 6);
    }
}
