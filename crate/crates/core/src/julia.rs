//! Point clouds approximating J(f), nearest-neighbour queries on them, ball
//! masks around Ω and box-counting dimension.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::metric::MilnorMetric;
use crate::rational_map::{is_infinite, RationalMap};

pub const DEFAULT_BURN_IN: usize = 100;
pub const MEMBERSHIP_WINDOW: f64 = 1e6;
/// Forward steps for the membership proxy. Longer runs amplify rounding
/// error past the window even for exact Julia points of expanding maps.
pub const MEMBERSHIP_STEPS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMethod {
    InverseIteration,
    EscapeBoundary,
    /// Depth-first inverse tree with a per-cell hit cap.
    CappedTree,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JuliaSample {
    pub points: Vec<Complex64>,
    pub method: SampleMethod,
    pub seed: u64,
    pub count: usize,
    /// Steps where a degenerate fiber forced a perturbation of the walker.
    pub perturbations: usize,
}

/// Random backward orbit: each step picks one of the d preimages uniformly.
pub fn sample_inverse_iteration(
    map: &RationalMap,
    z0: Complex64,
    count: usize,
    burn_in: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<JuliaSample> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if is_infinite(z0) {
        return Err(Error::InvalidArgument("start point must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = z0;
    let mut points = Vec::with_capacity(count);
    let mut perturbations = 0;
    if burn_in == 0 {
        points.push(z);
    }
    let steps = burn_in + count - usize::from(burn_in == 0);
    for step in 0..steps {
        let pre = loop {
            match map.preimages(z, tol) {
                Ok(p) => break p,
                Err(Error::DegenerateFiber(_)) | Err(Error::FiberResidual { .. }) => {
                    perturbations += 1;
                    z += Complex64::new(1e-9, 1e-9) * z.norm().max(1.0);
                }
                Err(e) => return Err(e),
            }
        };
        z = pre[rng.gen_range(0..pre.len())];
        if is_infinite(z) {
            return Err(Error::DegenerateFiber(z));
        }
        if step >= burn_in {
            points.push(z);
        }
    }
    points.truncate(count);
    Ok(JuliaSample {
        count: points.len(),
        points,
        method: SampleMethod::InverseIteration,
        seed,
        perturbations,
    })
}

/// Parameters of the capped inverse tree walk.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CappedTreeParams {
    pub cell: f64,
    pub cap: u32,
    /// Levels walked before points are recorded.
    pub skip_levels: usize,
    pub max_depth: usize,
    pub max_points: usize,
}

impl Default for CappedTreeParams {
    fn default() -> Self {
        Self {
            cell: 3e-4,
            cap: 2,
            skip_levels: 12,
            max_depth: 400,
            max_points: 200_000,
        }
    }
}

/// Depth-first walk of the inverse tree that stops descending through grid
/// cells already holding `cap` recorded points. Unlike a random backward
/// orbit this reaches deep cusps and fjords near parabolic points.
pub fn sample_capped_tree(
    map: &RationalMap,
    anchor: Complex64,
    params: CappedTreeParams,
    seed: u64,
    tol: &Tolerances,
) -> Result<JuliaSample> {
    if !(params.cell > 0.0) || params.cap == 0 {
        return Err(Error::InvalidArgument("cell and cap must be positive".into()));
    }
    let mut hits: HashMap<(i64, i64), u32> = HashMap::new();
    let mut points = Vec::new();
    let mut stack = vec![(anchor, 0usize)];
    let mut perturbations = 0;
    while let Some((z, depth)) = stack.pop() {
        if points.len() >= params.max_points {
            break;
        }
        if depth >= params.skip_levels {
            let key = cell_key(z, params.cell);
            let h = hits.entry(key).or_insert(0);
            if *h >= params.cap {
                continue;
            }
            *h += 1;
            points.push(z);
        }
        if depth >= params.max_depth {
            continue;
        }
        let pre = match map.preimages(z, tol) {
            Ok(p) => p,
            Err(Error::DegenerateFiber(_)) | Err(Error::FiberResidual { .. }) => {
                perturbations += 1;
                map.preimages(z + Complex64::new(1e-9, 1e-9), tol)?
            }
            Err(e) => return Err(e),
        };
        for w in pre.into_iter().rev() {
            if !is_infinite(w) {
                stack.push((w, depth + 1));
            }
        }
    }
    Ok(JuliaSample {
        count: points.len(),
        points,
        method: SampleMethod::CappedTree,
        seed,
        perturbations,
    })
}

/// Boundary of the escape set of a polynomial on a square grid: cells whose
/// escape status differs from a 4-neighbour.
pub fn sample_escape_boundary(
    map: &RationalMap,
    center: Complex64,
    half_width: f64,
    resolution: usize,
    max_iter: usize,
    seed: u64,
) -> Result<JuliaSample> {
    if !map.is_polynomial() {
        return Err(Error::InvalidArgument(
            "escape-boundary sampling needs a polynomial map".into(),
        ));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be >= 2".into()));
    }
    let escape_radius = 1e3_f64.max(2.0 * half_width);
    let h = 2.0 * half_width / (resolution - 1) as f64;
    let at = |i: usize, j: usize| {
        center + Complex64::new(-half_width + i as f64 * h, -half_width + j as f64 * h)
    };
    let escaped: Vec<bool> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let mut z = at(k % resolution, k / resolution);
            for _ in 0..max_iter {
                if !(z.norm() <= escape_radius) {
                    return true;
                }
                z = map.evaluate(z);
            }
            !(z.norm() <= escape_radius)
        })
        .collect();
    let mut points = Vec::new();
    for j in 0..resolution {
        for i in 0..resolution {
            let e = escaped[j * resolution + i];
            let differs = (i + 1 < resolution && escaped[j * resolution + i + 1] != e)
                || (j + 1 < resolution && escaped[(j + 1) * resolution + i] != e);
            if differs {
                points.push(at(i, j) + Complex64::new(0.5 * h, 0.5 * h));
            }
        }
    }
    Ok(JuliaSample {
        count: points.len(),
        points,
        method: SampleMethod::EscapeBoundary,
        seed,
        perturbations: 0,
    })
}

/// Cheap necessary condition for z ∈ J: the forward orbit stays in the window.
pub fn membership_proxy(map: &RationalMap, z: Complex64, steps: usize, window: f64) -> bool {
    let mut x = z;
    for _ in 0..steps {
        if is_infinite(x) || !(x.norm() <= window) {
            return false;
        }
        x = map.evaluate(x);
    }
    !is_infinite(x) && x.norm() <= window
}

/// Drops points within `radius` of any of `centers`.
pub fn thin_near(points: &[Complex64], centers: &[Complex64], radius: f64) -> Vec<Complex64> {
    points
        .iter()
        .copied()
        .filter(|&z| centers.iter().all(|&c| (z - c).norm() >= radius))
        .collect()
}

fn cell_key(z: Complex64, h: f64) -> (i64, i64) {
    ((z.re / h).floor() as i64, (z.im / h).floor() as i64)
}

/// Uniform-grid index for nearest-neighbour queries.
pub struct PointIndex<'a> {
    points: &'a [Complex64],
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    min_key: (i64, i64),
    max_key: (i64, i64),
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [Complex64]) -> Self {
        let finite: Vec<Complex64> = points.iter().copied().filter(|z| z.is_finite()).collect();
        let (mut lo, mut hi) = (
            Complex64::new(f64::MAX, f64::MAX),
            Complex64::new(f64::MIN, f64::MIN),
        );
        for z in &finite {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let extent = if finite.is_empty() {
            1.0
        } else {
            (hi.re - lo.re).max(hi.im - lo.im).max(1e-12)
        };
        let cell = extent / (finite.len().max(1) as f64).sqrt();
        Self::with_cell(points, cell)
    }

    pub fn with_cell(points: &'a [Complex64], cell: f64) -> Self {
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let (mut min_key, mut max_key) = ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN));
        for (i, z) in points.iter().enumerate() {
            if !z.is_finite() {
                continue;
            }
            let k = cell_key(*z, cell);
            min_key = (min_key.0.min(k.0), min_key.1.min(k.1));
            max_key = (max_key.0.max(k.0), max_key.1.max(k.1));
            grid.entry(k).or_default().push(i);
        }
        Self {
            points,
            cell,
            grid,
            min_key,
            max_key,
        }
    }

    /// Nearest indexed point to z, skipping index `exclude`. Ties go to the lower index.
    pub fn nearest_excluding(&self, z: Complex64, exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.grid.is_empty() || !z.is_finite() {
            return None;
        }
        let (cx, cy) = cell_key(z, self.cell);
        let last_ring = [
            cx - self.min_key.0,
            self.max_key.0 - cx,
            cy - self.min_key.1,
            self.max_key.1 - cy,
        ]
        .into_iter()
        .map(i64::abs)
        .max()
        .unwrap_or(0);
        let mut best: Option<(usize, f64)> = None;
        let visit = |key: (i64, i64), best: &mut Option<(usize, f64)>| {
            if let Some(ids) = self.grid.get(&key) {
                for &i in ids {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d = (self.points[i] - z).norm();
                    if best.map_or(true, |(bi, bd)| d < bd || (d == bd && i < bi)) {
                        *best = Some((i, d));
                    }
                }
            }
        };
        for ring in 0..=last_ring {
            // Points in ring R are at least (R - 1) cells away.
            if let Some((_, d)) = best {
                if d <= (ring - 1) as f64 * self.cell {
                    break;
                }
            }
            if ring == 0 {
                visit((cx, cy), &mut best);
                continue;
            }
            for dx in -ring..=ring {
                visit((cx + dx, cy - ring), &mut best);
                visit((cx + dx, cy + ring), &mut best);
            }
            for dy in (-ring + 1)..ring {
                visit((cx - ring, cy + dy), &mut best);
                visit((cx + ring, cy + dy), &mut best);
            }
        }
        best
    }

    pub fn nearest(&self, z: Complex64) -> Option<(usize, f64)> {
        self.nearest_excluding(z, None)
    }

    /// Indices of all points strictly within `radius` of z.
    pub fn within(&self, z: Complex64, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !z.is_finite() {
            return out;
        }
        let (cx, cy) = cell_key(z, self.cell);
        let reach = (radius / self.cell).ceil() as i64;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) {
                    out.extend(ids.iter().copied().filter(|&i| (self.points[i] - z).norm() < radius));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Largest nearest-neighbour gap in the cloud; a proxy for how finely the
/// sample covers J.
pub fn mesh_estimate(points: &[Complex64]) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let index = PointIndex::new(points);
    points
        .par_iter()
        .enumerate()
        .map(|(i, &z)| index.nearest_excluding(z, Some(i)).map_or(f64::INFINITY, |(_, d)| d))
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two finite clouds.
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |from: &[Complex64], to: &[Complex64]| {
        let index = PointIndex::new(to);
        from.par_iter()
            .map(|&z| index.nearest(z).map_or(f64::INFINITY, |(_, d)| d))
            .reduce(|| 0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxCountFit {
    pub dimension: f64,
    pub intercept: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub residual_rms: f64,
    pub r_squared: f64,
    /// All counts equal; the slope is reported as 0.
    pub degenerate: bool,
}

/// Least-squares slope of log N(δ) against log(1/δ).
pub fn box_counting_dimension(points: &[Complex64], scales: &[f64]) -> Result<BoxCountFit> {
    if points.len() < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "box counting needs at least 10^4 points, got {}",
            points.len()
        )));
    }
    if scales.len() < 4 {
        return Err(Error::InvalidArgument("box counting needs at least 4 scales".into()));
    }
    if scales.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("scales must be positive".into()));
    }
    let (lo, hi) = scales
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument("scales must span at least a decade".into()));
    }
    let counts: Vec<usize> = scales
        .par_iter()
        .map(|&s| {
            let mut cells: std::collections::HashSet<(i64, i64)> = std::collections::HashSet::new();
            for z in points.iter().filter(|z| z.is_finite()) {
                cells.insert(cell_key(*z, s));
            }
            cells.len()
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let degenerate = counts.iter().all(|&c| c == counts[0]);
    let (slope, intercept, rms, r2) = if degenerate {
        (0.0, ys[0], 0.0, 1.0)
    } else {
        least_squares(&xs, &ys)?
    };
    Ok(BoxCountFit {
        dimension: slope,
        intercept,
        scales: scales.to_vec(),
        counts,
        residual_rms: rms,
        r_squared: r2,
        degenerate,
    })
}

/// (slope, intercept, residual rms, r^2) of an ordinary least-squares line.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok((slope, intercept, (ss_res / n).sqrt(), r2))
}

/// Distance used by [`ball_mask`].
#[derive(Clone, Copy, Debug)]
pub enum MaskMetric<'a> {
    Euclidean,
    /// Local Milnor distance; pairs farther apart than α are outside.
    Milnor(&'a MilnorMetric),
}

/// Membership in the union of open balls of the given radius around `centers`.
pub fn ball_mask(
    points: &[Complex64],
    centers: &[Complex64],
    radius: f64,
    metric: MaskMetric<'_>,
) -> Result<Vec<bool>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("ball radius must be positive".into()));
    }
    Ok(points
        .par_iter()
        .map(|&z| {
            centers.iter().any(|&w| match metric {
                MaskMetric::Euclidean => (z - w).norm() < radius,
                MaskMetric::Milnor(m) => m.local_distance(z, w).map_or(false, |d| d < radius),
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_iteration_on_circle() {
        let tol = Tolerances::default();
        let f = RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let s = sample_inverse_iteration(&f, c(2.0, 0.0), 2000, 50, 7, &tol).unwrap();
        assert_eq!(s.points.len(), 2000);
        assert!(s.points.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
        let again = sample_inverse_iteration(&f, c(2.0, 0.0), 2000, 50, 7, &tol).unwrap();
        assert_eq!(s.points, again.points);
    }

    #[test]
    fn single_point_without_burn_in() {
        let tol = Tolerances::default();
        let f = RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let s = sample_inverse_iteration(&f, c(1.0, 0.0), 1, 0, 0, &tol).unwrap();
        assert_eq!(s.points, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn ball_mask_rules() {
        let pts = [c(0.55, 0.0), c(0.75, 0.0), c(0.9, 0.0)];
        let mask = ball_mask(&pts, &[c(0.5, 0.0)], 0.25, MaskMetric::Euclidean).unwrap();
        assert_eq!(mask, vec![true, false, false]);
        let mask = ball_mask(&pts, &[], 0.1, MaskMetric::Euclidean).unwrap();
        assert!(mask.iter().all(|m| !m));
    }

    #[test]
    fn nearest_neighbour_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Complex64> = (0..500)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-0.2..0.3)))
            .collect();
        let index = PointIndex::new(&pts);
        for q in [c(0.0, 0.0), c(3.0, -2.0), c(-0.7, 0.25), pts[17]] {
            let brute = pts
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(index.nearest(q).unwrap().1, brute);
        }
    }

    #[test]
    fn box_count_of_repeated_point() {
        let pts = vec![c(0.3, 0.3); 10_000];
        let fit = box_counting_dimension(&pts, &[0.1, 0.05, 0.02, 0.01]).unwrap();
        assert_eq!(fit.dimension, 0.0);
        assert!(fit.degenerate);
        assert!(box_counting_dimension(&pts[..10], &[0.1, 0.05, 0.02, 0.01]).is_err());
        assert!(box_counting_dimension(&pts, &[0.1, 0.05, 0.02]).is_err());
        assert!(box_counting_dimension(&pts, &[0.1, 0.08, 0.06, 0.04]).is_err());
    }

    #[test]
    fn membership_proxy_separates_escape() {
        let f = RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        assert!(membership_proxy(&f, Complex64::from_polar(1.0, 0.3), MEMBERSHIP_STEPS, MEMBERSHIP_WINDOW));
        assert!(!membership_proxy(&f, c(1.5, 0.0), MEMBERSHIP_STEPS, MEMBERSHIP_WINDOW));
    }
}
