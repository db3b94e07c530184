//! Dense complex polynomials (ascending coefficients) and root finding.
//!
//! Roots are found with the Aberth–Ehrlich simultaneous iteration followed by
//! Newton polishing. The same iteration is also available in an "implicit"
//! form that only needs the Newton quotient `p(z)/p'(z)`, which lets callers
//! solve polynomials whose coefficients are never expanded (fixed points of
//! high iterates, for example).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming exact trailing zeros.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `z`.
    pub fn identity() -> Self {
        Self::new(vec![ZERO, ONE])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    /// Coefficient of z^k (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Sum of |a_k| |z|^k, the scale against which residuals are measured.
    pub fn abs_eval(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::constant(ONE);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Coefficients of `w^deg p(1/w)`, i.e. the polynomial read in the chart at infinity.
    pub fn reversed(&self, deg: usize) -> Self {
        let mut c = vec![ZERO; deg + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            if k <= deg {
                c[deg - k] = a;
            }
        }
        Self::new(c)
    }

    /// Relative residual |p(z)| / sum |a_k||z|^k.
    pub fn relative_residual(&self, z: Complex64) -> f64 {
        let scale = self.abs_eval(z);
        if scale == 0.0 {
            return 0.0;
        }
        self.eval(z).norm() / scale
    }
}

/// Stopping rules for the simultaneous iteration.
#[derive(Clone, Copy, Debug)]
pub struct AberthOptions {
    pub max_iterations: usize,
    /// A root is frozen once its correction drops below `step_tol * (1 + |z|)`.
    pub step_tol: f64,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self {
            max_iterations: 600,
            step_tol: 1e-15,
        }
    }
}

/// Outcome of an Aberth run: the approximations and, per root, the last
/// Newton quotient magnitude (used downstream as an inclusion radius).
#[derive(Clone, Debug)]
pub struct AberthRun {
    pub roots: Vec<Complex64>,
    pub newton_steps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Aberth–Ehrlich iteration for a polynomial known only through its Newton
/// quotient. `newton(z)` must return `p(z)/p'(z)` (or `None` when `p'(z)` vanishes).
/// The number of roots is `initial.len()`; it must equal the true degree.
pub fn aberth_implicit<F>(newton: F, initial: Vec<Complex64>, opts: AberthOptions) -> AberthRun
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let n = initial.len();
    let mut z = initial;
    let mut frozen = vec![false; n];
    let mut last_step = vec![f64::INFINITY; n];
    let mut iterations = 0;
    while iterations < opts.max_iterations && frozen.iter().any(|f| !f) {
        iterations += 1;
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let zi = z[i];
            let ratio = match newton(zi) {
                Some(r) => r,
                None => {
                    // p'(z) = 0: nudge off the critical point.
                    z[i] = zi + Complex64::new(1e-7, 1e-7) * (1.0 + zi.norm());
                    continue;
                }
            };
            if ratio == ZERO {
                frozen[i] = true;
                last_step[i] = 0.0;
                continue;
            }
            let mut repulsion = ZERO;
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = zi - zj;
                    if diff != ZERO {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = ONE - ratio * repulsion;
            let step = if denom.norm() > 0.0 && denom.is_finite() {
                ratio / denom
            } else {
                ratio
            };
            if !step.is_finite() {
                continue;
            }
            z[i] = zi - step;
            last_step[i] = step.norm();
            if step.norm() <= opts.step_tol * (1.0 + zi.norm()) {
                frozen[i] = true;
            }
        }
    }
    let newton_steps = z
        .iter()
        .map(|&zi| newton(zi).map_or(f64::INFINITY, |r| r.norm()))
        .collect();
    AberthRun {
        converged: frozen.iter().all(|&f| f),
        roots: z,
        newton_steps,
        iterations,
    }
}

/// Initial guesses on a circle, slightly rotated off the real axis.
pub fn circle_guesses(n: usize, radius: f64, center: Complex64) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 + 0.25) / n as f64 + 0.4;
            center + Complex64::from_polar(radius, theta)
        })
        .collect()
}

/// All roots of `p` with multiplicity, sorted lexicographically by (re, im).
pub fn roots(p: &Polynomial, polish_tol: f64) -> Result<Vec<Complex64>> {
    let deg = match p.degree() {
        None => return Err(Error::InvalidArgument("roots of the zero polynomial".into())),
        Some(d) => d,
    };
    let mut out = match deg {
        0 => Vec::new(),
        1 => vec![-p.coeff(0) / p.coeff(1)],
        2 => quadratic_roots(p.coeff(2), p.coeff(1), p.coeff(0)),
        _ => {
            let lead = p.leading();
            // Fujiwara bound on the root moduli.
            let bound = (0..deg)
                .map(|k| (p.coeff(k) / lead).norm().powf(1.0 / (deg - k) as f64))
                .fold(0.0_f64, f64::max)
                * 2.0;
            let center = -p.coeff(deg - 1) / (lead * deg as f64);
            let radius = (bound * 0.5).max(1e-3);
            let dp = p.derivative();
            let run = aberth_implicit(
                |z| {
                    let d = dp.eval(z);
                    if d == ZERO {
                        None
                    } else {
                        Some(p.eval(z) / d)
                    }
                },
                circle_guesses(deg, radius, center),
                AberthOptions::default(),
            );
            let ok = run
                .roots
                .iter()
                .all(|&z| z.is_finite() && p.relative_residual(z) < 1e-6);
            if !ok {
                return Err(Error::RootSolver {
                    degree: deg,
                    iterations: run.iterations,
                    coefficients: format!("{:?}", p.coeffs()),
                });
            }
            run.roots
        }
    };
    for z in out.iter_mut() {
        *z = newton_polish(p, *z, polish_tol, 8);
    }
    sort_lex(&mut out);
    Ok(out)
}

/// Numerically stable quadratic formula for a z^2 + b z + c.
pub fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    let disc = (b * b - a * c * 4.0).sqrt();
    // Choose the sign that avoids cancellation.
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) * 0.5
    } else {
        -(b - disc) * 0.5
    };
    if q == ZERO {
        return vec![ZERO, ZERO];
    }
    vec![q / a, c / q]
}

/// Newton polishing; keeps the best iterate and stops once the relative
/// residual is below `tol` or stops improving.
pub fn newton_polish(p: &Polynomial, z0: Complex64, tol: f64, max_steps: usize) -> Complex64 {
    let mut best = z0;
    let mut best_res = p.relative_residual(z0);
    let mut z = z0;
    for _ in 0..max_steps {
        if best_res < tol {
            break;
        }
        let (v, dv) = p.eval_with_derivative(z);
        if dv == ZERO {
            break;
        }
        z -= v / dv;
        let res = p.relative_residual(z);
        if !(res < best_res) {
            break;
        }
        best = z;
        best_res = res;
    }
    best
}

pub fn lex_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn sort_lex(v: &mut [Complex64]) {
    v.sort_by(lex_cmp);
}

/// Groups points into clusters by single linkage: two points join when their
/// distance is at most `radius(i) + radius(j)` or `min_radius`. Returns the
/// index lists in order of first appearance.
pub fn cluster_points(points: &[Complex64], radii: &[f64], min_radius: f64) -> Vec<Vec<usize>> {
    cluster_by(points.len(), |i, j| {
        (points[i] - points[j]).norm() <= (radii[i] + radii[j]).max(min_radius)
    })
}

/// Single-linkage clusters of `0..n` under the symmetric relation `joined`.
pub fn cluster_by(n: usize, joined: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if joined(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn horner_and_derivative() {
        let p = Polynomial::from_real(&[1.0, 0.0, 3.0]);
        assert_eq!(p.eval(c(1.0, 0.0)), c(4.0, 0.0));
        let (v, d) = p.eval_with_derivative(c(2.0, 0.0));
        assert_eq!(v, c(13.0, 0.0));
        assert_eq!(d, c(12.0, 0.0));
        assert_eq!(p.derivative(), Polynomial::from_real(&[0.0, 6.0]));
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = Polynomial::from_real(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Polynomial::from_real(&[0.0]).degree(), None);
    }

    #[test]
    fn roots_of_unity_cubic() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let r = roots(&p, 1e-13).unwrap();
        assert_eq!(r.len(), 3);
        for z in &r {
            assert!((z.powu(3) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn wilkinson_like_degree_ten() {
        // (z-1)(z-2)...(z-10)
        let mut p = Polynomial::constant(ONE);
        for k in 1..=10 {
            p = p.mul(&Polynomial::from_real(&[-(k as f64), 1.0]));
        }
        let r = roots(&p, 1e-14).unwrap();
        for (k, z) in r.iter().enumerate() {
            assert!((z - c((k + 1) as f64, 0.0)).norm() < 1e-6, "{z}");
        }
    }

    #[test]
    fn quadratic_double_root() {
        let r = quadratic_roots(ONE, c(-1.0, 0.0), c(0.25, 0.0));
        for z in r {
            assert!((z - 0.5).norm() < 1e-8);
        }
    }

    #[test]
    fn clustering_merges_close_points() {
        let pts = [c(0.0, 0.0), c(1e-7, 0.0), c(1.0, 0.0)];
        let groups = cluster_points(&pts, &[0.0; 3], 1e-6);
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn reversed_is_chart_at_infinity() {
        let p = Polynomial::from_real(&[1.0, 2.0, 3.0]);
        let w = c(0.3, -0.2);
        let lhs = p.reversed(2).eval(w);
        let rhs = p.eval(w.inv()) * w * w;
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
