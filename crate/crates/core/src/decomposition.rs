//! The λ-decomposition of orbit segments into a good prefix and a bad suffix,
//! with λ the indicator of E(α) = J \ B̄(Ω, 2α).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::rational_map::{is_infinite, RationalMap};

/// (x, n): the points x, f x, ..., f^{n-1} x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub start: Complex64,
    pub points: Vec<Complex64>,
}

impl OrbitSegment {
    pub fn new(map: &RationalMap, start: Complex64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("segment length must be >= 1".into()));
        }
        Ok(Self {
            start,
            points: map.orbit(start, n),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Complex64 {
        *self.points.last().expect("segments are nonempty")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionParams {
    pub alpha: f64,
    pub eta: f64,
}

impl DecompositionParams {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidArgument(format!("eta must lie in (0, 1], got {eta}")));
        }
        Ok(Self { alpha, eta })
    }
}

/// 1 iff the Euclidean distance from z to Ω exceeds 2α; the closed ball gets 0.
pub fn lambda_indicator(z: Complex64, omega_points: &[Complex64], alpha: f64) -> u8 {
    if is_infinite(z) {
        return 1;
    }
    let far = omega_points.iter().all(|&w| (z - w).norm() > 2.0 * alpha);
    u8::from(far)
}

pub fn lambda_pattern(points: &[Complex64], omega_points: &[Complex64], alpha: f64) -> Vec<u8> {
    points
        .iter()
        .map(|&z| lambda_indicator(z, omega_points, alpha))
        .collect()
}

fn average(values: &[u8]) -> f64 {
    values.iter().map(|&v| v as u32).sum::<u32>() as f64 / values.len() as f64
}

/// Every suffix average is at least η.
pub fn pattern_in_good(lambda: &[u8], eta: f64) -> bool {
    let n = lambda.len();
    let mut sum = 0u32;
    for k in 1..=n {
        sum += lambda[n - k] as u32;
        if !(sum as f64 / k as f64 >= eta) {
            return false;
        }
    }
    n > 0
}

/// The full average is below η.
pub fn pattern_in_bad(lambda: &[u8], eta: f64) -> bool {
    !lambda.is_empty() && average(lambda) < eta
}

/// (g, s) with s the largest suffix length such that the suffix lies in B(η)
/// and the remaining prefix lies in G(η); empty parts impose nothing.
pub fn decompose_pattern(lambda: &[u8], eta: f64) -> (usize, usize) {
    let n = lambda.len();
    for s in (0..=n).rev() {
        let g = n - s;
        let suffix_ok = s == 0 || pattern_in_bad(&lambda[g..], eta);
        let prefix_ok = g == 0 || pattern_in_good(&lambda[..g], eta);
        if suffix_ok && prefix_ok {
            return (g, s);
        }
    }
    // Unreachable: the largest k whose suffix average is below η always splits.
    (0, n)
}

pub fn in_good(segment: &OrbitSegment, omega_points: &[Complex64], params: &DecompositionParams) -> bool {
    pattern_in_good(&lambda_pattern(&segment.points, omega_points, params.alpha), params.eta)
}

pub fn in_bad(segment: &OrbitSegment, omega_points: &[Complex64], params: &DecompositionParams) -> bool {
    pattern_in_bad(&lambda_pattern(&segment.points, omega_points, params.alpha), params.eta)
}

pub fn decompose(
    segment: &OrbitSegment,
    omega_points: &[Complex64],
    params: &DecompositionParams,
) -> (usize, usize) {
    decompose_pattern(&lambda_pattern(&segment.points, omega_points, params.alpha), params.eta)
}

/// The segment ends in E(α).
pub fn in_d_alpha(segment: &OrbitSegment, omega_points: &[Complex64], alpha: f64) -> bool {
    lambda_indicator(segment.last(), omega_points, alpha) == 1
}

/// Random backward orbit z_0, z_1, ... with f(z_{k+1}) = z_k; all points lie
/// on J to rounding accuracy.
pub fn backward_orbit(
    map: &RationalMap,
    z0: Complex64,
    len: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(len);
    let mut z = z0;
    for _ in 0..len {
        let pre = map.preimages(z, tol)?;
        z = pre[rng.gen_range(0..pre.len())];
        out.push(z);
    }
    Ok(out)
}

/// Random segments: windows of random backward orbits, each rebuilt from its
/// first point by forward iteration. Lengths are uniform in `lengths`.
pub fn random_segments(
    map: &RationalMap,
    anchor: Complex64,
    count: usize,
    lengths: std::ops::RangeInclusive<usize>,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<OrbitSegment>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_len = *lengths.end();
    let mut walk = backward_orbit(map, anchor, 100, &mut rng, tol)?;
    let mut z = *walk.last().unwrap();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(lengths.clone());
        walk = backward_orbit(map, z, max_len + rng.gen_range(0..8), &mut rng, tol)?;
        z = *walk.last().unwrap();
        out.push(OrbitSegment::new(map, walk[walk.len() - n.max(1)], n.max(1))?);
    }
    Ok(out)
}

/// Good segments of length n, harvested by sliding a window along long
/// random backward orbits and keeping windows in G(η).
pub fn harvest_good_segments(
    map: &RationalMap,
    anchor: Complex64,
    omega_points: &[Complex64],
    params: &DecompositionParams,
    n: usize,
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<OrbitSegment>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = *backward_orbit(map, anchor, 100, &mut rng, tol)?.last().unwrap();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 200 * count.max(1) {
            return Err(Error::InvalidArgument(format!(
                "could not harvest {count} good segments of length {n}"
            )));
        }
        let walk = backward_orbit(map, z, 4 * n, &mut rng, tol)?;
        z = *walk.last().unwrap();
        // Forward order: walk[i] maps onto walk[i - 1].
        let forward: Vec<Complex64> = walk.iter().rev().copied().collect();
        // Non-overlapping windows keep the harvested segments independent.
        for w in forward.chunks_exact(n) {
            let pattern = lambda_pattern(w, omega_points, params.alpha);
            if pattern_in_good(&pattern, params.eta) {
                let seg = OrbitSegment::new(map, w[0], n)?;
                if in_good(&seg, omega_points, params) {
                    out.push(seg);
                    if out.len() == count {
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}
