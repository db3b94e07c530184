//! Empirical specification: transition times, gluing of orbit segments by
//! backward search, and the contraction and Bowen-variation bounds on good
//! segments. Every shadowing claim is certified by forward iteration.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::decomposition::OrbitSegment;
use crate::error::{Error, Result};
use crate::julia::{mesh_estimate, PointIndex};
use crate::metric::MilnorMetric;
use crate::potential::{birkhoff_sum_along, GeometricMetric, Potential};
use crate::rational_map::{is_infinite, RationalMap};

/// Survivors kept per level of a pruned gluing search.
const SEARCH_WIDTH: usize = 4096;

/// Points of `points` pairwise at least `spacing` apart, covering `points`
/// within `spacing`; greedy in input order.
pub fn greedy_net(points: &[Complex64], spacing: f64) -> Vec<Complex64> {
    let key = |z: Complex64| ((z.re / spacing).floor() as i64, (z.im / spacing).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
    let mut net = Vec::new();
    for &z in points.iter().filter(|z| !is_infinite(**z)) {
        let (kx, ky) = key(z);
        let near = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(kx + dx, ky + dy))
                    .is_some_and(|b| b.iter().any(|&w| (w - z).norm() < spacing))
            })
        });
        if !near {
            grid.entry((kx, ky)).or_default().push(z);
            net.push(z);
        }
    }
    net
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionParams {
    pub net_spacing: f64,
    pub n_max: usize,
    /// Ball centers are restricted to net points outside B̄(Ω, 2α) when set.
    pub restrict_to_e_alpha: Option<(Vec<Complex64>, f64)>,
}

impl Default for TransitionParams {
    fn default() -> Self {
        Self {
            net_spacing: 0.05,
            n_max: 16,
            restrict_to_e_alpha: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionRow {
    pub center: Complex64,
    /// Target whose depth-N fiber comes least close to the center.
    pub worst_target: Complex64,
    pub worst_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionTime {
    pub n: usize,
    pub epsilon: f64,
    pub net_size: usize,
    pub centers: usize,
    /// Per center, at the returned N.
    pub certificate: Vec<TransitionRow>,
    /// (N, number of uncovered center/target pairs) for every depth tried.
    pub history: Vec<(usize, usize)>,
}

/// Smallest N ≥ 1 such that the depth-N fiber of every net point meets every
/// ε-ball around a center; a finite witness for f^N(B(c, ε)) ⊇ J.
pub fn estimate_transition_time(
    map: &RationalMap,
    epsilon: f64,
    julia_sample: &[Complex64],
    params: &TransitionParams,
    tol: &Tolerances,
) -> Result<TransitionTime> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let mesh = mesh_estimate(julia_sample);
    if mesh > epsilon / 4.0 {
        return Err(Error::SampleTooSparse {
            mesh,
            limit: epsilon / 4.0,
        });
    }
    let net = greedy_net(julia_sample, params.net_spacing);
    let centers: Vec<Complex64> = match &params.restrict_to_e_alpha {
        Some((omega_points, alpha)) => net
            .iter()
            .copied()
            .filter(|&z| omega_points.iter().all(|&w| (z - w).norm() > 2.0 * alpha))
            .collect(),
        None => net.clone(),
    };
    if centers.is_empty() {
        return Err(Error::InvalidArgument("no ball centers left in the net".into()));
    }
    let mut fibers: Vec<Vec<Complex64>> = net.iter().map(|&y| vec![y]).collect();
    let mut history = Vec::new();
    for n in 1..=params.n_max {
        if (map.degree() as f64).powi(n as i32) > tol.node_budget as f64 {
            break;
        }
        fibers = fibers
            .par_iter()
            .map(|level| -> Result<Vec<Complex64>> {
                let mut next = Vec::with_capacity(level.len() * map.degree());
                for &z in level {
                    next.extend(map.preimages(z, tol)?.into_iter().filter(|w| !is_infinite(*w)));
                }
                Ok(next)
            })
            .collect::<Result<_>>()?;
        // distances[t][c]: nearest point of target t's fiber to center c.
        let distances: Vec<Vec<f64>> = fibers
            .par_iter()
            .map(|leaves| {
                let index = PointIndex::new(leaves);
                centers
                    .iter()
                    .map(|&c| index.nearest(c).map_or(f64::INFINITY, |(_, d)| d))
                    .collect()
            })
            .collect();
        let uncovered = distances.iter().flatten().filter(|&&d| !(d < epsilon)).count();
        history.push((n, uncovered));
        if uncovered == 0 {
            let certificate = centers
                .iter()
                .enumerate()
                .map(|(ci, &center)| {
                    let (ti, d) = distances
                        .iter()
                        .enumerate()
                        .map(|(ti, row)| (ti, row[ci]))
                        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
                    TransitionRow {
                        center,
                        worst_target: net[ti],
                        worst_distance: d,
                    }
                })
                .collect();
            return Ok(TransitionTime {
                n,
                epsilon,
                net_size: net.len(),
                centers: centers.len(),
                certificate,
                history,
            });
        }
    }
    Err(Error::TransitionCap {
        cap: history.last().map_or(0, |h| h.0),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GluingResult {
    pub y: Complex64,
    pub transition_time: usize,
    /// Time at which the orbit of y starts shadowing each segment.
    pub offsets: Vec<usize>,
    /// d_{n_i}(f^{offset_i} y, x_i) by forward iteration.
    pub distances: Vec<f64>,
    /// Per link, preimage digits from y_{i+1} back to y_i.
    pub branch_codes: Vec<Vec<u16>>,
}

struct SearchNode {
    z: Complex64,
    parent: u32,
    digit: u16,
    worst: f64,
}

/// Node at depth n_i + τ below `target` whose ancestors ε-shadow `segment`,
/// with the smallest shadowing distance. Err carries the nearest miss.
fn shadow_search(
    map: &RationalMap,
    target: Complex64,
    segment: &OrbitSegment,
    tau: usize,
    epsilon: f64,
    tol: &Tolerances,
) -> Result<std::result::Result<(Complex64, Vec<u16>, f64), f64>> {
    let n = segment.len();
    let mut levels: Vec<Vec<SearchNode>> = vec![vec![SearchNode {
        z: target,
        parent: u32::MAX,
        digit: 0,
        worst: 0.0,
    }]];
    let depth = n + tau;
    for level in 1..=depth {
        let prev = levels.last().unwrap();
        // Nodes deeper than τ are matched against the segment backwards.
        let reference = (level > tau).then(|| segment.points[depth - level]);
        let mut next: Vec<SearchNode> = prev
            .par_iter()
            .enumerate()
            .map(|(i, node)| -> Result<Vec<SearchNode>> {
                let pre = map.preimages(node.z, tol)?;
                Ok(pre
                    .into_iter()
                    .enumerate()
                    .filter(|(_, z)| !is_infinite(*z))
                    .map(|(k, z)| {
                        let worst = match reference {
                            Some(x) => node.worst.max((z - x).norm()),
                            None => 0.0,
                        };
                        SearchNode {
                            z,
                            parent: i as u32,
                            digit: k as u16,
                            worst,
                        }
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if reference.is_some() {
            let best = next.iter().map(|s| s.worst).fold(f64::INFINITY, f64::min);
            next.retain(|s| s.worst < epsilon);
            if next.is_empty() {
                return Ok(Err(best));
            }
            if next.len() > SEARCH_WIDTH {
                // Stable order keeps the selection deterministic.
                let mut idx: Vec<usize> = (0..next.len()).collect();
                idx.sort_by(|&a, &b| next[a].worst.total_cmp(&next[b].worst).then(a.cmp(&b)));
                idx.truncate(SEARCH_WIDTH);
                idx.sort_unstable();
                let mut keep = vec![false; next.len()];
                for i in idx {
                    keep[i] = true;
                }
                let mut it = keep.into_iter();
                next.retain(|_| it.next().unwrap());
            }
        }
        levels.push(next);
    }
    let last = levels.last().unwrap();
    let (best, node) = last
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.worst.total_cmp(&b.1.worst).then(a.0.cmp(&b.0)))
        .expect("nonempty after pruning");
    let mut code = Vec::with_capacity(depth);
    let mut idx = best;
    for k in (1..=depth).rev() {
        let s = &levels[k][idx];
        code.push(s.digit);
        idx = s.parent as usize;
    }
    code.reverse();
    Ok(Ok((node.z, code, node.worst)))
}

/// Offsets t_1 = 0, t_{i+1} = t_i + n_i + τ.
pub fn gluing_offsets(segments: &[OrbitSegment], tau: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(segments.len());
    let mut t = 0;
    for s in segments {
        offsets.push(t);
        t += s.len() + tau;
    }
    offsets
}

/// Glues the segments with uniform gap τ = `transition_time`, working back
/// from y_k = x_k through the preimage tree of each y_{i+1}.
pub fn glue(
    map: &RationalMap,
    segments: &[OrbitSegment],
    transition_time: usize,
    epsilon: f64,
    tol: &Tolerances,
) -> Result<GluingResult> {
    if segments.is_empty() {
        return Err(Error::InvalidArgument("nothing to glue".into()));
    }
    for s in &segments[..segments.len() - 1] {
        let needed = (map.degree() as f64).powi((s.len() + transition_time) as i32);
        if needed > tol.node_budget as f64 {
            return Err(Error::BudgetExceeded {
                what: "gluing tree",
                needed: needed.min(usize::MAX as f64) as usize,
                budget: tol.node_budget,
            });
        }
    }
    let k = segments.len();
    let mut y = segments[k - 1].start;
    let mut branch_codes = Vec::with_capacity(k - 1);
    for i in (0..k - 1).rev() {
        match shadow_search(map, y, &segments[i], transition_time, epsilon, tol)? {
            Ok((z, code, _)) => {
                y = z;
                branch_codes.push(code);
            }
            Err(nearest_miss) => {
                return Err(Error::GluingFailed {
                    link: i,
                    nearest_miss,
                    epsilon,
                })
            }
        }
    }
    branch_codes.reverse();
    let offsets = gluing_offsets(segments, transition_time);
    let distances = shadowing_distances(map, y, segments, &offsets);
    Ok(GluingResult {
        y,
        transition_time,
        offsets,
        distances,
        branch_codes,
    })
}

fn shadowing_distances(
    map: &RationalMap,
    y: Complex64,
    segments: &[OrbitSegment],
    offsets: &[usize],
) -> Vec<f64> {
    let total = offsets.last().copied().unwrap_or(0) + segments.last().map_or(0, |s| s.len());
    let orbit = map.orbit(y, total.max(1));
    segments
        .iter()
        .zip(offsets)
        .map(|(s, &t)| {
            s.points
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let w = orbit[t + j];
                    if is_infinite(w) || is_infinite(x) {
                        f64::INFINITY
                    } else {
                        (w - x).norm()
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Recomputes every offset distance by forward iteration of y.
pub fn verify_shadowing(
    map: &RationalMap,
    result: &GluingResult,
    segments: &[OrbitSegment],
    epsilon: f64,
) -> bool {
    let offsets = gluing_offsets(segments, result.transition_time);
    offsets == result.offsets
        && shadowing_distances(map, result.y, segments, &offsets)
            .iter()
            .all(|&d| d < epsilon)
}

fn metric_distance(metric: Option<&MilnorMetric>, x: Complex64, y: Complex64) -> Result<f64> {
    match metric {
        Some(m) => m.local_distance(x, y),
        None => Ok((x - y).norm()),
    }
}

/// Pulls f^n x + δ back along the segment's own inverse branches (at each
/// step the preimage nearest f^ℓ x). Returns y, f y, ..., f^n y as built.
pub fn shadow_partner(
    map: &RationalMap,
    segment: &OrbitSegment,
    delta: Complex64,
    tol: &Tolerances,
) -> Result<Vec<Complex64>> {
    let n = segment.len();
    let end = map.evaluate(segment.last());
    let mut chain = vec![end + delta];
    for l in (0..n).rev() {
        let x = segment.points[l];
        let pre = map.preimages(*chain.last().unwrap(), tol)?;
        let z = pre
            .into_iter()
            .filter(|z| !is_infinite(*z))
            .min_by(|a, b| (a - x).norm().total_cmp(&(b - x).norm()))
            .ok_or_else(|| Error::InvalidArgument("no finite preimage".into()))?;
        chain.push(z);
    }
    chain.reverse();
    Ok(chain)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionReport {
    /// d(f^ℓ x, f^ℓ y) for ℓ = 0..=n.
    pub distances: Vec<f64>,
    /// r^{−η(n−ℓ)} ε.
    pub bounds: Vec<f64>,
    pub violations: Vec<usize>,
    pub r: f64,
    pub eta: f64,
    pub epsilon: f64,
}

/// Distances along a shadowing pair against the exponential envelope. The
/// envelope needs d(f^n x, f^n y) ≤ ε, one step past B_n(x, ε), so the
/// partner orbit has n + 1 points.
pub fn contraction_profile(
    map: &RationalMap,
    segment: &OrbitSegment,
    partner: &[Complex64],
    metric: Option<&MilnorMetric>,
    r: f64,
    eta: f64,
    epsilon: f64,
) -> Result<ContractionReport> {
    let n = segment.len();
    if partner.len() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "partner orbit has {} points, expected {}",
            partner.len(),
            n + 1
        )));
    }
    let mut xs = segment.points.clone();
    xs.push(map.evaluate(segment.last()));
    let distances = xs
        .iter()
        .zip(partner)
        .map(|(&x, &y)| metric_distance(metric, x, y))
        .collect::<Result<Vec<f64>>>()?;
    if distances.iter().any(|&d| !(d < epsilon)) {
        return Err(Error::InvalidArgument("partner does not ε-shadow the segment".into()));
    }
    let bounds: Vec<f64> = (0..=n)
        .map(|l| r.powf(-eta * (n - l) as f64) * epsilon)
        .collect();
    let violations = (0..=n)
        .filter(|&l| distances[l] > bounds[l] * (1.0 + 1e-9))
        .collect();
    Ok(ContractionReport {
        distances,
        bounds,
        violations,
        r,
        eta,
        epsilon,
    })
}

/// |φ(x) − φ(y)| ≤ K d(x, y)^a.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderData {
    pub k: f64,
    pub a: f64,
}

/// Lipschitz data for φ_t = −t log|f'| in the given metric: K is the largest
/// |t f''/f'| / ρ over the sample, padded by 10% for unsampled points.
pub fn geometric_holder_data(
    map: &RationalMap,
    t: f64,
    metric: Option<&MilnorMetric>,
    sample: &[Complex64],
) -> Result<HolderData> {
    let w = map.wronskian();
    let dw = w.derivative();
    let q = map.denominator();
    let dq = q.derivative();
    let k = sample
        .par_iter()
        .filter(|z| !is_infinite(**z))
        .map(|&z| -> Result<f64> {
            // f' = W/Q², so f''/f' = W'/W − 2Q'/Q.
            let ratio = dw.eval(z) / w.eval(z) - dq.eval(z) * 2.0 / q.eval(z);
            let rho = match metric {
                Some(m) => m.density(z)?,
                None => 1.0,
            };
            Ok(t.abs() * ratio.norm() / rho)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if !k.is_finite() {
        return Err(Error::NearCritical(Complex64::new(f64::NAN, f64::NAN)));
    }
    Ok(HolderData { k: 1.1 * k, a: 1.0 })
}

/// Hölder data for geometric, constant and mixed potentials; a mix gets
/// Σ |w_i| K_i with the common exponent 1.
pub fn holder_data(
    map: &RationalMap,
    potential: &Potential,
    metric: Option<&MilnorMetric>,
    sample: &[Complex64],
) -> Result<HolderData> {
    match potential {
        Potential::Constant(_) => Ok(HolderData { k: 0.0, a: 1.0 }),
        Potential::Geometric {
            t,
            metric: GeometricMetric::Euclidean,
        } => geometric_holder_data(map, *t, metric, sample),
        Potential::Combination(parts) => {
            let mut k = 0.0;
            for (w, p) in parts {
                k += w.abs() * holder_data(map, p, metric, sample)?.k;
            }
            Ok(HolderData { k, a: 1.0 })
        }
        other => Err(Error::InvalidArgument(format!(
            "no Hölder constant available for the potential {other}"
        ))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BowenVariationReport {
    pub sup_variation: f64,
    pub bound: f64,
    pub pass: bool,
    pub trials: usize,
    pub skipped: usize,
    pub holder: HolderData,
    pub r: f64,
    pub eta: f64,
    pub epsilon: f64,
}

/// sup |S_nφ(x) − S_nφ(y)| over partners y built by [`shadow_partner`]
/// from random perturbations of metric size below ε, against the bound
/// K ε^a / (1 − r^{−ηa}).
#[allow(clippy::too_many_arguments)]
pub fn bowen_variation(
    map: &RationalMap,
    potential: &Potential,
    segments: &[OrbitSegment],
    metric: Option<&MilnorMetric>,
    epsilon: f64,
    trials: usize,
    holder: HolderData,
    r: f64,
    eta: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<BowenVariationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 0.0f64;
    let mut done = 0;
    let mut skipped = 0;
    for segment in segments {
        let sx = birkhoff_sum_along(map, potential, &segment.points)?;
        let end = map.evaluate(segment.last());
        let rho = match metric {
            Some(m) => m.density(end)?,
            None => 1.0,
        };
        for _ in 0..trials {
            let radius = 0.99 * epsilon / rho * rng.gen::<f64>();
            let delta = Complex64::from_polar(radius, rng.gen::<f64>() * std::f64::consts::TAU);
            let partner = match shadow_partner(map, segment, delta, tol) {
                Ok(p) => p,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let shadows = segment
                .points
                .iter()
                .chain(std::iter::once(&end))
                .zip(&partner)
                .all(|(&x, &y)| metric_distance(metric, x, y).is_ok_and(|d| d < epsilon));
            if !shadows {
                skipped += 1;
                continue;
            }
            let sy = birkhoff_sum_along(map, potential, &partner[..segment.len()])?;
            sup = sup.max((sx - sy).abs());
            done += 1;
        }
    }
    let bound = holder.k * epsilon.powf(holder.a) / (1.0 - r.powf(-eta * holder.a));
    Ok(BowenVariationReport {
        sup_variation: sup,
        bound,
        pass: sup <= bound,
        trials: done,
        skipped,
        holder,
        r,
        eta,
        epsilon,
    })
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

    #[test]
    fn net_is_separated_and_covering() {
        let pts: Vec<Complex64> = (0..1000).map(|i| Complex64::from_polar(1.0, i as f64 * 0.00628)).collect();
        let net = greedy_net(&pts, 0.1);
        for (i, a) in net.iter().enumerate() {
            for b in &net[i + 1..] {
                assert!((a - b).norm() >= 0.1);
            }
        }
        for p in &pts {
            assert!(net.iter().any(|q| (p - q).norm() < 0.1));
        }
    }

    #[test]
    fn single_segment_glues_to_itself() {
        let f = square();
        let tol = Tolerances::default();
        let seg = OrbitSegment::new(&f, Complex64::from_polar(1.0, 0.3), 5).unwrap();
        let res = glue(&f, std::slice::from_ref(&seg), 3, 0.1, &tol).unwrap();
        assert_eq!(res.y, seg.start);
        assert!(verify_shadowing(&f, &res, &[seg], 0.1));
    }

    #[test]
    fn square_two_arcs() {
        let f = square();
        let tol = Tolerances::default();
        let a = OrbitSegment::new(&f, Complex64::from_polar(1.0, 0.7), 5).unwrap();
        let b = OrbitSegment::new(&f, Complex64::from_polar(1.0, 2.9), 5).unwrap();
        let res = glue(&f, &[a.clone(), b.clone()], 4, 0.2, &tol).unwrap();
        assert!(res.distances.iter().all(|&d| d < 0.2));
        assert!(verify_shadowing(&f, &res, &[a.clone(), b.clone()], 0.2));
        let mut moved = res.clone();
        moved.y += c(2.0, 0.0);
        assert!(!verify_shadowing(&f, &moved, &[a, b], 0.2));
    }

    #[test]
    fn contraction_envelope_substitutions() {
        let f = square();
        let tol = Tolerances::default();
        let seg = OrbitSegment::new(&f, Complex64::from_polar(1.0, 0.3), 6).unwrap();
        let partner = shadow_partner(&f, &seg, Complex64::from_polar(1e-3, 1.0), &tol).unwrap();
        let rep = contraction_profile(&f, &seg, &partner, None, 2.0, 1.0, 0.01).unwrap();
        assert!((rep.bounds[5] - 0.01 / 2.0).abs() < 1e-15);
        assert!(rep.violations.is_empty(), "{:?}", rep);
    }
}
