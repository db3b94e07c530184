//! Milnor-type conformal metric: a constant plateau M on B(Ω, α) and the
//! quasi-hyperbolic surrogate 1/dist(z, P_N) elsewhere.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::julia;
use crate::periodic::OmegaSet;
use crate::rational_map::{is_infinite, RationalMap};

pub const ALPHA_LADDER: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
pub const DEFAULT_TRUNCATION: usize = 50;
/// Sampled norms below 1 - this count as violations; the parabolic point itself has norm exactly 1.
pub const VIOLATION_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PostcriticalTruncation {
    pub points: Vec<Complex64>,
    pub warning: Option<String>,
}

/// {f(c), ..., f^N(c) : c critical} together with Ω, finite chart only,
/// deduplicated at 1e-10 in order of generation.
pub fn postcritical_truncation(
    map: &RationalMap,
    n: usize,
    omega: &OmegaSet,
    tol: &Tolerances,
) -> Result<PostcriticalTruncation> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation length must be >= 1".into()));
    }
    let mut points: Vec<Complex64> = Vec::new();
    let push = |z: Complex64, points: &mut Vec<Complex64>| {
        if !is_infinite(z) && points.iter().all(|p| (p - z).norm() > 1e-10) {
            points.push(z);
        }
    };
    for c in map.critical_points(tol)? {
        let mut z = c;
        for _ in 0..n {
            z = map.evaluate(z);
            push(z, &mut points);
        }
    }
    for w in omega.points() {
        push(w, &mut points);
    }
    let warning = omega
        .is_empty()
        .then(|| "no parabolic cycle: the Milnor metric is meant for parabolic maps".to_string());
    Ok(PostcriticalTruncation { points, warning })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MilnorMetric {
    pub alpha: f64,
    pub m: f64,
    pub postcritical_truncation: Vec<Complex64>,
    pub omega_points: Vec<Complex64>,
    pub r_alpha: Option<f64>,
    pub density_mode: String,
}

impl MilnorMetric {
    pub fn new(
        alpha: f64,
        m: f64,
        postcritical_truncation: Vec<Complex64>,
        omega_points: Vec<Complex64>,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
        }
        Ok(Self {
            alpha,
            m,
            postcritical_truncation,
            omega_points,
            r_alpha: None,
            density_mode: "surrogate-quasihyperbolic".into(),
        })
    }

    pub fn in_plateau(&self, z: Complex64) -> bool {
        self.omega_points.iter().any(|&w| (z - w).norm() < self.alpha)
    }

    /// 1/dist(z, P_N), ignoring the plateau.
    pub fn surrogate_density(&self, z: Complex64) -> Result<f64> {
        let d = self
            .postcritical_truncation
            .iter()
            .map(|&p| (z - p).norm())
            .fold(f64::INFINITY, f64::min);
        if d == f64::INFINITY {
            // Empty truncation: the surrogate degenerates to the Euclidean density.
            return Ok(1.0);
        }
        let rho = 1.0 / d;
        if rho.is_finite() {
            Ok(rho)
        } else {
            Err(Error::SingularDensity(z))
        }
    }

    pub fn density(&self, z: Complex64) -> Result<f64> {
        if is_infinite(z) {
            return Err(Error::SingularDensity(z));
        }
        if self.in_plateau(z) {
            Ok(self.m)
        } else {
            self.surrogate_density(z)
        }
    }

    /// ||f'(z)|| = ρ(f z) |f'(z)| / ρ(z).
    pub fn derivative_norm(&self, map: &RationalMap, z: Complex64) -> Result<f64> {
        let rho_z = self.density(z)?;
        let fz = map.evaluate(z);
        let rho_fz = self.density(fz)?;
        Ok(rho_fz * map.derivative(z)?.norm() / rho_z)
    }

    /// Midpoint rule |x - y| ρ((x + y)/2); only defined at scales up to α.
    pub fn local_distance(&self, x: Complex64, y: Complex64) -> Result<f64> {
        let s = (x - y).norm();
        if s > self.alpha {
            return Err(Error::NotLocal {
                distance: s,
                limit: self.alpha,
            });
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        // (x + y)/2 is symmetric in its arguments bit for bit.
        Ok(s * self.density((x + y) * 0.5)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MChoice {
    pub m: f64,
    /// f^{-1}(Ω) \ Ω.
    pub extra_preimages: Vec<Complex64>,
    /// Set when f^{-1}(Ω) = Ω and M falls back to 1 + margin.
    pub flagged: bool,
}

/// M = max{ r ρ(z)/|f'(z)| : z in f^{-1}(Ω) \ Ω } + 1 with the surrogate ρ.
pub fn choose_m(
    map: &RationalMap,
    omega: &OmegaSet,
    r_alpha: f64,
    truncation: &[Complex64],
    tol: &Tolerances,
) -> Result<MChoice> {
    omega.require_nonempty()?;
    let omega_points = omega.points();
    let surrogate = MilnorMetric::new(1.0, 1.0, truncation.to_vec(), Vec::new())?;
    let mut extra = Vec::new();
    for &w in &omega_points {
        for z in map.preimages(w, tol)? {
            let in_omega = omega_points.iter().any(|&p| (z - p).norm() < 1e-6);
            let seen = extra.iter().any(|&p: &Complex64| (z - p).norm() < 1e-9);
            if !in_omega && !seen && !is_infinite(z) {
                extra.push(z);
            }
        }
    }
    if extra.is_empty() {
        return Ok(MChoice {
            m: 1.0 + 0.1,
            extra_preimages: extra,
            flagged: true,
        });
    }
    let mut best = 0.0_f64;
    for &z in &extra {
        let ratio = r_alpha * surrogate.surrogate_density(z)? / map.derivative(z)?.norm();
        best = best.max(ratio);
    }
    Ok(MChoice {
        m: best + 1.0,
        extra_preimages: extra,
        flagged: false,
    })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub alpha: f64,
    pub m: f64,
    pub r_min_on_k: f64,
    pub global_min: f64,
    pub violations: Vec<Complex64>,
    pub k_points: usize,
    pub sampled: usize,
    pub skipped_singular: usize,
    pub mesh: f64,
}

impl ExpansionReport {
    pub fn pass(&self) -> bool {
        self.r_min_on_k > 1.0 && self.violations.is_empty()
    }
}

/// Minimum of the surrogate derivative norm over sample points z with z and
/// f(z) outside B(Ω, α). The plateau constant plays no role there.
pub fn measure_r(
    map: &RationalMap,
    omega: &OmegaSet,
    alpha: f64,
    truncation: &[Complex64],
    sample: &[Complex64],
) -> Result<f64> {
    let metric = MilnorMetric::new(alpha, 1.0, truncation.to_vec(), omega.points())?;
    let r = sample
        .par_iter()
        .filter_map(|&z| {
            let fz = map.evaluate(z);
            if metric.in_plateau(z) || metric.in_plateau(fz) {
                return None;
            }
            metric.derivative_norm(map, z).ok()
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(r)
}

/// Expansion of f in the metric over a Julia sample.
pub fn verify_expansion(
    metric: &MilnorMetric,
    map: &RationalMap,
    sample: &[Complex64],
) -> Result<ExpansionReport> {
    let mesh = julia::mesh_estimate(sample);
    if !(mesh <= metric.alpha / 4.0) {
        return Err(Error::SampleTooSparse {
            mesh,
            limit: metric.alpha / 4.0,
        });
    }
    struct Acc {
        r: f64,
        global: f64,
        k: usize,
        skipped: usize,
        violations: Vec<(usize, Complex64)>,
    }
    let empty = || Acc {
        r: f64::INFINITY,
        global: f64::INFINITY,
        k: 0,
        skipped: 0,
        violations: Vec::new(),
    };
    let acc = sample
        .par_iter()
        .enumerate()
        .fold(empty, |mut acc, (i, &z)| {
            match metric.derivative_norm(map, z) {
                Ok(norm) => {
                    acc.global = acc.global.min(norm);
                    if !metric.in_plateau(z) && !metric.in_plateau(map.evaluate(z)) {
                        acc.r = acc.r.min(norm);
                        acc.k += 1;
                    }
                    if norm < 1.0 - VIOLATION_SLACK {
                        acc.violations.push((i, z));
                    }
                }
                Err(_) => acc.skipped += 1,
            }
            acc
        })
        .reduce(empty, |mut a, b| {
            a.r = a.r.min(b.r);
            a.global = a.global.min(b.global);
            a.k += b.k;
            a.skipped += b.skipped;
            a.violations.extend(b.violations);
            a
        });
    let mut violations = acc.violations;
    violations.sort_by_key(|v| v.0);
    Ok(ExpansionReport {
        alpha: metric.alpha,
        m: metric.m,
        r_min_on_k: acc.r,
        global_min: acc.global,
        violations: violations.into_iter().map(|v| v.1).collect(),
        k_points: acc.k,
        sampled: sample.len(),
        skipped_singular: acc.skipped,
        mesh,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub metric: MilnorMetric,
    pub report: ExpansionReport,
    pub m_choice: MChoice,
    pub truncation_size: usize,
    /// Every α tried, in ladder order, with its report.
    pub attempts: Vec<ExpansionReport>,
    pub pass: bool,
}

/// Two-pass calibration down the α ladder: r first, then M from r; the
/// first α whose expansion report passes is kept.
pub fn calibrate(
    map: &RationalMap,
    omega: &OmegaSet,
    sample: &[Complex64],
    ladder: &[f64],
    truncation_len: usize,
    tol: &Tolerances,
) -> Result<Calibration> {
    omega.require_nonempty()?;
    let truncation = postcritical_truncation(map, truncation_len, omega, tol)?.points;
    let mut attempts = Vec::new();
    let mut fallback: Option<Calibration> = None;
    for &alpha in ladder {
        let r = measure_r(map, omega, alpha, &truncation, sample)?;
        let m_choice = choose_m(map, omega, r, &truncation, tol)?;
        let mut metric = MilnorMetric::new(alpha, m_choice.m, truncation.clone(), omega.points())?;
        metric.r_alpha = Some(r);
        let report = match verify_expansion(&metric, map, sample) {
            Ok(rep) => rep,
            Err(Error::SampleTooSparse { .. }) => continue,
            Err(e) => return Err(e),
        };
        attempts.push(report.clone());
        let pass = report.pass();
        let cal = Calibration {
            metric,
            report,
            m_choice,
            truncation_size: truncation.len(),
            attempts: Vec::new(),
            pass,
        };
        if pass {
            return Ok(Calibration { attempts, ..cal });
        }
        if fallback.is_none() {
            fallback = Some(cal);
        }
    }
    match fallback {
        Some(cal) => Ok(Calibration { attempts, ..cal }),
        None => Err(Error::SampleTooSparse {
            mesh: julia::mesh_estimate(sample),
            limit: ladder.iter().copied().fold(0.0, f64::max) / 4.0,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::omega;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quad() -> RationalMap {
        RationalMap::polynomial(&[0.25, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn truncation_of_quad() {
        let tol = Tolerances::default();
        let om = omega(&quad(), 1, &tol).unwrap();
        let t = postcritical_truncation(&quad(), 3, &om, &tol).unwrap();
        let expected = [0.25, 5.0 / 16.0, 89.0 / 256.0, 0.5];
        assert_eq!(t.points.len(), 4);
        for (p, e) in t.points.iter().zip(expected) {
            assert!((p - e).norm() < 1e-9, "{p} vs {e}");
        }
        assert!(t.warning.is_none());
        let empty = OmegaSet::default();
        let t = postcritical_truncation(&quad(), 1, &empty, &tol).unwrap();
        assert_eq!(t.points.len(), 1);
        assert!(t.warning.is_some());
    }

    #[test]
    fn density_cases() {
        let m = MilnorMetric::new(0.1, 3.0, vec![c(0.0, 0.0), c(0.5, 0.0)], vec![c(0.5, 0.0)]).unwrap();
        assert_eq!(m.density(c(0.55, 0.0)).unwrap(), 3.0);
        assert_eq!(m.density(c(0.0, -0.5)).unwrap(), 2.0);
        assert!(matches!(m.density(c(0.0, 0.0)), Err(Error::SingularDensity(_))));
    }

    #[test]
    fn derivative_norm_of_square() {
        let f = RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let m = MilnorMetric::new(0.1, 1.0, vec![c(0.0, 0.0)], vec![]).unwrap();
        let z = Complex64::from_polar(1.3, 0.4);
        // (|z| / |z|^2) * 2|z| = 2
        assert!((m.derivative_norm(&f, z).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn local_distance_rules() {
        let m = MilnorMetric::new(0.1, 3.0, vec![c(0.0, 0.0)], vec![c(0.5, 0.0)]).unwrap();
        let (x, y) = (c(0.51, 0.0), c(0.53, 0.01));
        assert_eq!(m.local_distance(x, x).unwrap(), 0.0);
        assert_eq!(m.local_distance(x, y).unwrap(), m.local_distance(y, x).unwrap());
        assert!((m.local_distance(x, y).unwrap() - 3.0 * (x - y).norm()).abs() < 1e-15);
        assert!(matches!(
            m.local_distance(c(0.0, 0.3), c(0.4, 0.3)),
            Err(Error::NotLocal { .. })
        ));
    }

    #[test]
    fn m_formula_for_quad() {
        let tol = Tolerances::default();
        let om = omega(&quad(), 1, &tol).unwrap();
        let t = postcritical_truncation(&quad(), 50, &om, &tol).unwrap().points;
        let choice = choose_m(&quad(), &om, 1.2, &t, &tol).unwrap();
        assert_eq!(choice.extra_preimages.len(), 1);
        assert!((choice.extra_preimages[0] + 0.5).norm() < 1e-6);
        let d = t.iter().map(|p| (p + 0.5).norm()).fold(f64::INFINITY, f64::min);
        assert!((choice.m - (1.2 / d + 1.0)).abs() < 1e-6);
        assert!(matches!(
            choose_m(&quad(), &OmegaSet::default(), 1.2, &t, &tol),
            Err(Error::NotParabolic { .. })
        ));
    }
}
