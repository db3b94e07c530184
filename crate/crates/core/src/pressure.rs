//! Pressure oracles: separated-set partition sums, preimage trees, periodic
//! points and an Ulam transfer operator, plus the Bowen root, the pressure
//! gap and equilibrium-measure diagnostics.
//!
//! Every oracle produces a finite-n sequence (1/k) log Λ_k; the reported value
//! is an explicit extrapolation of that sequence and the mode is recorded.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::decomposition::{lambda_pattern, pattern_in_bad, pattern_in_good};
use crate::error::{Error, Result};
use crate::julia::sample_inverse_iteration;
use crate::metric::postcritical_truncation;
use crate::periodic::{a_omega, find_periodic_points, fixed_points_of_iterate, OmegaSet};
use crate::potential::{birkhoff_sum_along, Potential};
use crate::rational_map::{is_infinite, PreimageTree, RationalMap};

/// Below this many terms the exponential sum runs sequentially; above it the
/// halves are summed in parallel. The split points depend only on the length.
const PAIRWISE_BLOCK: usize = 256;

/// Anchor perturbations tried when a fiber degenerates.
const ANCHOR_RETRIES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Separated,
    Tree,
    Periodic,
    Ulam,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Separated => "separated",
            Method::Tree => "tree",
            Method::Periodic => "periodic",
            Method::Ulam => "ulam",
        };
        f.write_str(s)
    }
}

/// How a finite-n sequence is turned into a pressure value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Extrapolation {
    /// (1/n) log Λ_n.
    Last,
    /// log Λ_n − log Λ_{n−1}.
    Ratio,
    /// Aitken Δ² on the last three terms of (1/k) log Λ_k.
    Aitken,
    /// Least-squares fit of log Λ_k = kP + β log k + c over the last `window`
    /// depths; absorbs the polynomial prefactor that parabolic points produce.
    LogCorrected { window: usize },
}

impl Default for Extrapolation {
    fn default() -> Self {
        Extrapolation::Last
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub method: Method,
    pub n: usize,
    pub epsilon: Option<f64>,
    pub extrapolation: Extrapolation,
    /// Depth of the first entry of `diagnostics` and `log_sums`.
    pub first_k: usize,
    /// (1/k) log Λ_k for k = first_k, ..., n.
    pub diagnostics: Vec<f64>,
    pub log_sums: Vec<f64>,
    /// Change of the extrapolated value when the last depth is dropped.
    pub tail_width: f64,
    pub notes: Vec<String>,
}

impl PressureEstimate {
    fn from_log_sums(
        method: Method,
        first_k: usize,
        log_sums: Vec<f64>,
        extrapolation: Extrapolation,
        epsilon: Option<f64>,
        notes: Vec<String>,
    ) -> Self {
        let n = first_k + log_sums.len() - 1;
        let diagnostics = log_sums
            .iter()
            .enumerate()
            .map(|(i, l)| l / (first_k + i) as f64)
            .collect();
        let (value, tail_width) = extrapolate(&log_sums, first_k, extrapolation);
        Self {
            value,
            method,
            n,
            epsilon,
            extrapolation,
            first_k,
            diagnostics,
            log_sums,
            tail_width,
            notes,
        }
    }
}

/// ln Σ e^{v_i}, summed pairwise in a fixed order so parallel runs agree bit
/// for bit. Empty input gives −∞.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + pairwise_exp_sum(values, m).ln()
}

fn pairwise_exp_sum(values: &[f64], shift: f64) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().map(|v| (v - shift).exp()).sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    let (x, y) = rayon::join(|| pairwise_exp_sum(a, shift), || pairwise_exp_sum(b, shift));
    x + y
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Slope P of log Λ_k = kP + β log k + c over the given (k, log Λ_k).
fn log_corrected_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(k, y) in points {
        let row = [k, k.ln(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    solve3(ata, atb).map(|x| x[0])
}

fn extrapolate_once(log_sums: &[f64], first_k: usize, mode: Extrapolation) -> Option<f64> {
    let len = log_sums.len();
    let a = |i: usize| log_sums[i] / (first_k + i) as f64;
    match mode {
        Extrapolation::Last => Some(a(len - 1)),
        Extrapolation::Ratio => (len >= 2).then(|| log_sums[len - 1] - log_sums[len - 2]),
        Extrapolation::Aitken => {
            if len < 3 {
                return None;
            }
            let (x0, x1, x2) = (a(len - 3), a(len - 2), a(len - 1));
            let denom = x2 - 2.0 * x1 + x0;
            if denom.abs() < 1e-15 {
                Some(x2)
            } else {
                Some(x2 - (x2 - x1).powi(2) / denom)
            }
        }
        Extrapolation::LogCorrected { window } => {
            let w = window.min(len);
            let pts: Vec<(f64, f64)> = (len - w..len)
                .map(|i| ((first_k + i) as f64, log_sums[i]))
                .collect();
            if pts.iter().any(|p| !p.1.is_finite()) {
                return None;
            }
            log_corrected_slope(&pts)
        }
    }
}

/// (value, tail width). Non-finite or too short sequences fall back to the
/// last term with an infinite tail width.
pub fn extrapolate(log_sums: &[f64], first_k: usize, mode: Extrapolation) -> (f64, f64) {
    if log_sums.is_empty() {
        return (f64::NAN, f64::INFINITY);
    }
    let last = log_sums[log_sums.len() - 1] / (first_k + log_sums.len() - 1) as f64;
    let Some(value) = extrapolate_once(log_sums, first_k, mode) else {
        return (last, f64::INFINITY);
    };
    let tail = if log_sums.len() >= 2 {
        extrapolate_once(&log_sums[..log_sums.len() - 1], first_k, mode)
            .map(|prev| (value - prev).abs())
            .unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let tail = if tail.is_nan() { f64::INFINITY } else { tail };
    (value, tail)
}

// ---------------------------------------------------------------------------
// Anchors

fn farthest_from(points: &[Complex64], avoid: &[Complex64]) -> Option<Complex64> {
    let mut best: Option<(Complex64, f64)> = None;
    for &z in points {
        let d = avoid.iter().map(|&w| (z - w).norm()).fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(_, bd)| d > bd) {
            best = Some((z, d));
        }
    }
    best.map(|b| b.0)
}

/// A repelling periodic point of least period (at most 4), outside Ω and as
/// far as possible from the postcritical truncation.
pub fn generic_anchor(map: &RationalMap, omega: &OmegaSet, tol: &Tolerances) -> Result<Complex64> {
    let avoid = postcritical_truncation(map, 50, omega, tol)?.points;
    for n in 1..=4 {
        let candidates: Vec<Complex64> = find_periodic_points(map, n, tol)?
            .into_iter()
            .filter(|o| o.multiplier.norm() > 1.0 + tol.root_of_unity)
            .flat_map(|o| o.points)
            .filter(|z| !is_infinite(*z) && omega.distance(*z) > 1e-8)
            .collect();
        if let Some(z) = farthest_from(&candidates, &avoid) {
            return Ok(z);
        }
    }
    Err(Error::InvalidArgument(
        "no repelling periodic point of period <= 4 to anchor at".into(),
    ))
}

/// Default tree anchor: the first parabolic point when Ω is nonempty (its
/// own backward branch keeps the A(Ω, φ) floor in every partition sum),
/// otherwise [`generic_anchor`].
pub fn default_anchor(map: &RationalMap, omega: &OmegaSet, tol: &Tolerances) -> Result<Complex64> {
    match omega.points().first() {
        Some(&z) if !is_infinite(z) => Ok(z),
        _ => generic_anchor(map, omega, tol),
    }
}

// ---------------------------------------------------------------------------
// Tree oracle

/// Depth-n preimage tree, moving the anchor by 1e-6 when a fiber degenerates.
pub fn build_tree(
    map: &RationalMap,
    anchor: Complex64,
    n: usize,
    tol: &Tolerances,
) -> Result<(PreimageTree, Vec<String>)> {
    let mut notes = Vec::new();
    let mut w = anchor;
    for attempt in 0..=ANCHOR_RETRIES {
        match map.preimage_tree(w, n, tol) {
            Ok(tree) => return Ok((tree, notes)),
            Err(e @ (Error::DegenerateFiber(_) | Error::FiberResidual { .. }))
                if attempt < ANCHOR_RETRIES =>
            {
                let theta = 2.0 * std::f64::consts::PI * (attempt as f64 + 1.0) / 7.0;
                w = anchor + Complex64::from_polar(1e-6, theta);
                notes.push(format!("{e}; anchor moved to {w}"));
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("the final attempt returns")
}

/// sums[k][i] = S_kφ of node i at level k (sums[0] = [0]).
pub fn tree_birkhoff_sums(
    tree: &PreimageTree,
    phi: impl Fn(Complex64) -> Result<f64> + Sync,
) -> Result<Vec<Vec<f64>>> {
    let mut sums = vec![vec![0.0]];
    for k in 1..=tree.depth {
        let prev = &sums[k - 1];
        let level: Vec<f64> = tree
            .level(k)
            .par_iter()
            .map(|node| Ok(phi(node.z)? + prev[node.parent as usize]))
            .collect::<Result<_>>()?;
        sums.push(level);
    }
    Ok(sums)
}

/// log|f'| summed along tree branches; φ_t sums are −t times these.
pub fn tree_log_derivatives(map: &RationalMap, tree: &PreimageTree) -> Result<Vec<Vec<f64>>> {
    tree_birkhoff_sums(tree, |z| {
        let d = map.derivative(z)?.norm();
        if d < 1e-300 {
            Err(Error::NearCritical(z))
        } else {
            Ok(d.ln())
        }
    })
}

fn tree_log_sums(sums: &[Vec<f64>], scale: f64) -> Vec<f64> {
    sums[1..]
        .iter()
        .map(|level| {
            if scale == 1.0 {
                log_sum_exp(level)
            } else {
                let scaled: Vec<f64> = level.iter().map(|s| scale * s).collect();
                log_sum_exp(&scaled)
            }
        })
        .collect()
}

/// (1/n) log Σ_{z ∈ f^{-n}(w)} e^{S_nφ(z)} for every depth up to n.
pub fn pressure_tree(
    map: &RationalMap,
    potential: &Potential,
    anchor: Complex64,
    n: usize,
    extrapolation: Extrapolation,
    tol: &Tolerances,
) -> Result<PressureEstimate> {
    let (tree, notes) = build_tree(map, anchor, n, tol)?;
    let sums = tree_birkhoff_sums(&tree, |z| potential.eval(map, z))?;
    Ok(PressureEstimate::from_log_sums(
        Method::Tree,
        1,
        tree_log_sums(&sums, 1.0),
        extrapolation,
        None,
        notes,
    ))
}

/// A tree with cached log-derivative sums, for evaluating φ_t at many t.
pub struct GeometricTree {
    pub tree: PreimageTree,
    pub log_derivatives: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

impl GeometricTree {
    pub fn new(map: &RationalMap, anchor: Complex64, n: usize, tol: &Tolerances) -> Result<Self> {
        let (tree, notes) = build_tree(map, anchor, n, tol)?;
        let log_derivatives = tree_log_derivatives(map, &tree)?;
        Ok(Self {
            tree,
            log_derivatives,
            notes,
        })
    }

    pub fn pressure(&self, t: f64, extrapolation: Extrapolation) -> PressureEstimate {
        PressureEstimate::from_log_sums(
            Method::Tree,
            1,
            tree_log_sums(&self.log_derivatives, -t),
            extrapolation,
            None,
            self.notes.clone(),
        )
    }
}

// ---------------------------------------------------------------------------
// Periodic oracle

/// Distinct period-k points on J (|(f^k)'| ≥ 1 up to tolerance) for k = 1..=n,
/// with log|(f^k)'| at each.
pub struct PeriodicData {
    pub levels: Vec<Vec<(Complex64, f64)>>,
    pub skipped: usize,
}

impl PeriodicData {
    pub fn new(map: &RationalMap, n: usize, tol: &Tolerances) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("period must be >= 1".into()));
        }
        let mut levels = Vec::with_capacity(n);
        let mut skipped = 0;
        for k in 1..=n {
            let mut level = Vec::new();
            for p in fixed_points_of_iterate(map, k, tol)? {
                if is_infinite(p.z) {
                    skipped += 1;
                    continue;
                }
                let mut log_der = 0.0;
                let mut ok = true;
                let mut x = p.z;
                for _ in 0..k {
                    match map.derivative(x) {
                        Ok(d) if d.norm() > 0.0 => log_der += d.norm().ln(),
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                    x = map.evaluate(x);
                }
                if !ok {
                    skipped += 1;
                    continue;
                }
                // Attracting points lie in the Fatou set.
                if log_der >= -1e-6 {
                    level.push((p.z, log_der));
                }
            }
            levels.push(level);
        }
        Ok(Self { levels, skipped })
    }

    fn notes(&self) -> Vec<String> {
        if self.skipped > 0 {
            vec![format!(
                "{} periodic points whose orbit meets infinity or a critical point were left out",
                self.skipped
            )]
        } else {
            Vec::new()
        }
    }

    pub fn pressure_geometric(&self, t: f64, extrapolation: Extrapolation) -> PressureEstimate {
        let log_sums = self
            .levels
            .iter()
            .map(|level| {
                let v: Vec<f64> = level.iter().map(|(_, l)| -t * l).collect();
                log_sum_exp(&v)
            })
            .collect();
        PressureEstimate::from_log_sums(Method::Periodic, 1, log_sums, extrapolation, None, self.notes())
    }

    pub fn pressure(
        &self,
        map: &RationalMap,
        potential: &Potential,
        extrapolation: Extrapolation,
    ) -> Result<PressureEstimate> {
        let mut log_sums = Vec::with_capacity(self.levels.len());
        for (i, level) in self.levels.iter().enumerate() {
            let k = i + 1;
            let v: Vec<f64> = level
                .par_iter()
                .map(|(z, _)| birkhoff_sum_along(map, potential, &map.orbit(*z, k)))
                .collect::<Result<_>>()?;
            log_sums.push(log_sum_exp(&v));
        }
        Ok(PressureEstimate::from_log_sums(
            Method::Periodic,
            1,
            log_sums,
            extrapolation,
            None,
            self.notes(),
        ))
    }
}

/// (1/n) log Σ_{f^n z = z, z ∈ J} e^{S_nφ(z)}, each distinct point once.
pub fn pressure_periodic(
    map: &RationalMap,
    potential: &Potential,
    n: usize,
    extrapolation: Extrapolation,
    tol: &Tolerances,
) -> Result<PressureEstimate> {
    PeriodicData::new(map, n, tol)?.pressure(map, potential, extrapolation)
}

// ---------------------------------------------------------------------------
// Ulam oracle

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UlamConfig {
    pub cells_per_side: usize,
    pub sample_size: usize,
    pub burn_in: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for UlamConfig {
    fn default() -> Self {
        Self {
            cells_per_side: 256,
            sample_size: 200_000,
            burn_in: 100,
            max_iterations: 5000,
            seed: 7,
        }
    }
}

/// Occupied grid cells of a maximal-entropy sample and the cell of every
/// sample point and of its image.
pub struct UlamGrid {
    pub points: Vec<Complex64>,
    pub source: Vec<u32>,
    pub target: Vec<u32>,
    pub cells: usize,
    target_counts: Vec<f64>,
    degree: f64,
}

impl UlamGrid {
    pub fn new(map: &RationalMap, anchor: Complex64, config: &UlamConfig, tol: &Tolerances) -> Result<Self> {
        if config.cells_per_side == 0 {
            return Err(Error::InvalidArgument("Ulam grid needs at least one cell".into()));
        }
        let sample =
            sample_inverse_iteration(map, anchor, config.sample_size, config.burn_in, config.seed, tol)?;
        let points: Vec<Complex64> = sample.points.into_iter().filter(|z| !is_infinite(*z)).collect();
        let (mut lo_re, mut lo_im) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_re, mut hi_im) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for z in &points {
            lo_re = lo_re.min(z.re);
            lo_im = lo_im.min(z.im);
            hi_re = hi_re.max(z.re);
            hi_im = hi_im.max(z.im);
        }
        // A square window slightly larger than the sample's bounding box.
        let side = (hi_re - lo_re).max(hi_im - lo_im).max(1e-12) * 1.001;
        let h = side / config.cells_per_side as f64;
        let cx = 0.5 * (lo_re + hi_re) - 0.5 * side;
        let cy = 0.5 * (lo_im + hi_im) - 0.5 * side;
        let key = |z: Complex64| -> (i64, i64) {
            (((z.re - cx) / h).floor() as i64, ((z.im - cy) / h).floor() as i64)
        };
        let mut ids: HashMap<(i64, i64), u32> = HashMap::new();
        let mut source = Vec::with_capacity(points.len());
        for &z in &points {
            let next = ids.len() as u32;
            source.push(*ids.entry(key(z)).or_insert(next));
        }
        let cells = ids.len();
        let mut kept_points = Vec::with_capacity(points.len());
        let mut kept_source = Vec::with_capacity(points.len());
        let mut target = Vec::with_capacity(points.len());
        for (z, s) in points.into_iter().zip(source) {
            let w = map.evaluate(z);
            if is_infinite(w) {
                continue;
            }
            // Images that leave the occupied set carry no mass.
            if let Some(&j) = ids.get(&key(w)) {
                kept_points.push(z);
                kept_source.push(s);
                target.push(j);
            }
        }
        let mut target_counts = vec![0.0; cells];
        for &s in &kept_source {
            target_counts[s as usize] += 1.0;
        }
        Ok(Self {
            points: kept_points,
            source: kept_source,
            target,
            cells,
            target_counts,
            degree: map.degree() as f64,
        })
    }

    /// Leading log-eigenvalue of W_ji = d Σ_{x ∈ C_i, f x ∈ C_j} e^{φ(x)} / #C_j.
    /// `weights` holds φ at every sample point.
    pub fn pressure_from_weights(&self, weights: &[f64], max_iterations: usize) -> Result<PressureEstimate> {
        let shift = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::InvalidArgument("potential is not finite on the sample".into()));
        }
        let mut entries: HashMap<(u32, u32), f64> = HashMap::new();
        for ((&i, &j), &w) in self.source.iter().zip(&self.target).zip(weights) {
            *entries.entry((j, i)).or_insert(0.0) += (w - shift).exp();
        }
        let mut matrix: Vec<((u32, u32), f64)> = entries
            .into_iter()
            .map(|((j, i), s)| {
                let c = self.target_counts[j as usize].max(1.0);
                ((j, i), self.degree * s / c)
            })
            .collect();
        matrix.sort_by(|a, b| a.0.cmp(&b.0));
        let cells = self.cells;
        let mut v = vec![1.0 / cells as f64; cells];
        let mut history: Vec<f64> = Vec::new();
        let mut stable = 0;
        for _ in 0..max_iterations {
            let mut w = vec![0.0; cells];
            for &((j, i), a) in &matrix {
                w[j as usize] += a * v[i as usize];
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::PowerIteration { amplitude: f64::NAN });
            }
            for x in w.iter_mut() {
                *x /= total;
            }
            v = w;
            let estimate = total.ln() + shift;
            if let Some(&prev) = history.last() {
                if (estimate - prev).abs() < 1e-13 * estimate.abs().max(1.0) {
                    stable += 1;
                } else {
                    stable = 0;
                }
            }
            history.push(estimate);
            if stable >= 3 && history.len() >= 3 {
                break;
            }
        }
        let tail = &history[history.len().saturating_sub(20)..];
        let amplitude = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - tail.iter().copied().fold(f64::INFINITY, f64::min);
        if stable < 3 && amplitude > 1e-6 {
            return Err(Error::PowerIteration { amplitude });
        }
        let iterations = history.len();
        let last3: Vec<f64> = history[iterations.saturating_sub(3)..].to_vec();
        let value = *history.last().expect("at least one iteration");
        Ok(PressureEstimate {
            value,
            method: Method::Ulam,
            n: iterations,
            epsilon: None,
            extrapolation: Extrapolation::Last,
            first_k: iterations + 1 - last3.len(),
            diagnostics: last3.clone(),
            log_sums: last3,
            tail_width: amplitude,
            notes: vec![format!("{} occupied cells, {} samples", self.cells, self.points.len())],
        })
    }

    pub fn pressure(
        &self,
        map: &RationalMap,
        potential: &Potential,
        max_iterations: usize,
    ) -> Result<PressureEstimate> {
        let weights: Vec<f64> = self
            .points
            .par_iter()
            .map(|&z| potential.eval(map, z))
            .collect::<Result<_>>()?;
        self.pressure_from_weights(&weights, max_iterations)
    }

    pub fn log_derivatives(&self, map: &RationalMap) -> Result<Vec<f64>> {
        self.points
            .par_iter()
            .map(|&z| {
                let d = map.derivative(z)?.norm();
                if d < 1e-300 {
                    Err(Error::NearCritical(z))
                } else {
                    Ok(d.ln())
                }
            })
            .collect()
    }
}

pub fn pressure_ulam(
    map: &RationalMap,
    potential: &Potential,
    anchor: Complex64,
    config: &UlamConfig,
    tol: &Tolerances,
) -> Result<PressureEstimate> {
    UlamGrid::new(map, anchor, config, tol)?.pressure(map, potential, config.max_iterations)
}

// ---------------------------------------------------------------------------
// Separated sets

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Constraint {
    All,
    Good { alpha: f64, eta: f64 },
    Bad { alpha: f64, eta: f64 },
    DAlpha { alpha: f64 },
}

impl Constraint {
    fn admits(&self, orbit: &[Complex64], omega_points: &[Complex64]) -> bool {
        match *self {
            Constraint::All => true,
            Constraint::Good { alpha, eta } => {
                pattern_in_good(&lambda_pattern(orbit, omega_points, alpha), eta)
            }
            Constraint::Bad { alpha, eta } => {
                pattern_in_bad(&lambda_pattern(orbit, omega_points, alpha), eta)
            }
            Constraint::DAlpha { alpha } => {
                lambda_pattern(&orbit[orbit.len() - 1..], omega_points, alpha)[0] == 1
            }
        }
    }
}

/// Greedy lower witness for the supremum over separated sets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionSum {
    pub log_value: f64,
    pub selected: usize,
    pub admitted: usize,
    pub candidates: usize,
    pub warning: Option<String>,
}

impl PartitionSum {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

fn point_distance(a: Complex64, b: Complex64) -> f64 {
    match (is_infinite(a), is_infinite(b)) {
        (true, true) => 0.0,
        (false, false) => (a - b).norm(),
        _ => f64::INFINITY,
    }
}

/// d_n(x, y) = max_{0 ≤ k < n} |f^k x − f^k y| on precomputed orbits.
pub fn bowen_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| point_distance(x, y))
        .fold(0.0, f64::max)
}

/// Σ e^{S_nφ} over a greedy (n, ε)-separated subset of the admitted
/// candidates, taken in descending order of S_nφ.
pub fn partition_sum(
    map: &RationalMap,
    potential: &Potential,
    candidates: &[Complex64],
    n: usize,
    epsilon: f64,
    constraint: Constraint,
    omega_points: &[Complex64],
) -> Result<PartitionSum> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let evaluated: Vec<(Vec<Complex64>, f64)> = candidates
        .par_iter()
        .map(|&z| {
            let orbit = map.orbit(z, n);
            let s = birkhoff_sum_along(map, potential, &orbit)?;
            Ok((orbit, s))
        })
        .collect::<Result<_>>()?;
    let mut admitted: Vec<usize> = (0..evaluated.len())
        .filter(|&i| constraint.admits(&evaluated[i].0, omega_points))
        .collect();
    let admitted_count = admitted.len();
    if admitted.is_empty() {
        return Ok(PartitionSum {
            log_value: f64::NEG_INFINITY,
            selected: 0,
            admitted: 0,
            candidates: candidates.len(),
            warning: Some("no candidate satisfies the constraint; partition sum is 0".into()),
        });
    }
    admitted.sort_by(|&i, &j| evaluated[j].1.total_cmp(&evaluated[i].1).then(i.cmp(&j)));
    // d_n ≤ ε forces every orbit coordinate within ε, so selected orbits are
    // bucketed by the cells of their first and middle points.
    let mid = n / 2;
    let cell = |z: Complex64| -> (i64, i64) {
        if is_infinite(z) {
            (i64::MAX / 2, i64::MAX / 2)
        } else {
            ((z.re / epsilon).floor() as i64, (z.im / epsilon).floor() as i64)
        }
    };
    let key = |orbit: &[Complex64]| -> [i64; 4] {
        let (a, b) = cell(orbit[0]);
        let (c, d) = cell(orbit[mid]);
        [a, b, c, d]
    };
    let mut grid: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    let mut chosen = Vec::new();
    for i in admitted {
        let orbit = &evaluated[i].0;
        let k = key(orbit);
        let mut separated = true;
        'scan: for offset in 0..81 {
            let mut probe = k;
            let mut o = offset;
            for p in probe.iter_mut() {
                *p += (o % 3) as i64 - 1;
                o /= 3;
            }
            if let Some(bucket) = grid.get(&probe) {
                for &j in bucket {
                    if bowen_distance(orbit, &evaluated[j].0) <= epsilon {
                        separated = false;
                        break 'scan;
                    }
                }
            }
        }
        if separated {
            grid.entry(k).or_default().push(i);
            chosen.push(evaluated[i].1);
        }
    }
    Ok(PartitionSum {
        log_value: log_sum_exp(&chosen),
        selected: chosen.len(),
        admitted: admitted_count,
        candidates: candidates.len(),
        warning: None,
    })
}

/// (1/k) log Λ_k for k = 1..=n_max, candidates being the depth-k leaves of
/// a preimage tree at `anchor`.
#[allow(clippy::too_many_arguments)]
pub fn pressure_separated(
    map: &RationalMap,
    potential: &Potential,
    anchor: Complex64,
    n_max: usize,
    epsilon: f64,
    constraint: Constraint,
    omega_points: &[Complex64],
    extrapolation: Extrapolation,
    tol: &Tolerances,
) -> Result<PressureEstimate> {
    let (tree, mut notes) = build_tree(map, anchor, n_max, tol)?;
    let mut log_sums = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let leaves: Vec<Complex64> = tree.level(k).iter().map(|node| node.z).collect();
        let sum = partition_sum(map, potential, &leaves, k, epsilon, constraint, omega_points)?;
        if let Some(w) = sum.warning {
            notes.push(format!("n = {k}: {w}"));
        }
        log_sums.push(sum.log_value);
    }
    notes.push("greedy separated sets give a lower bound for each partition sum".into());
    Ok(PressureEstimate::from_log_sums(
        Method::Separated,
        1,
        log_sums,
        extrapolation,
        Some(epsilon),
        notes,
    ))
}

// ---------------------------------------------------------------------------
// Oracle configuration, the gap and the curve

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub tree_depth: usize,
    pub periodic_depth: usize,
    pub extrapolation: Extrapolation,
    pub anchor: Option<Complex64>,
    pub ulam: Option<UlamConfig>,
    /// Threshold for "P has reached 0" on parabolic maps.
    pub zero_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            tree_depth: 16,
            periodic_depth: 10,
            extrapolation: Extrapolation::LogCorrected { window: 7 },
            anchor: None,
            ulam: None,
            zero_tol: 0.005,
        }
    }
}

impl OracleConfig {
    pub fn anchor_for(&self, map: &RationalMap, omega: &OmegaSet, tol: &Tolerances) -> Result<Complex64> {
        match self.anchor {
            Some(a) => Ok(a),
            None => default_anchor(map, omega, tol),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub a: f64,
    pub p: f64,
    pub gap: bool,
    pub margin: f64,
    pub estimate: PressureEstimate,
}

impl GapReport {
    /// Compares A(Ω, φ) with a pressure estimate from any oracle.
    pub fn from_estimate(a: f64, estimate: PressureEstimate, zero_tol: f64) -> Self {
        let p = estimate.value;
        let margin = estimate.tail_width.max(zero_tol);
        Self {
            a,
            p,
            gap: a < p - margin,
            margin,
            estimate,
        }
    }
}

/// A(Ω, φ) against the tree pressure; the gap is declared only when it
/// exceeds the margin max(tail width, zero_tol).
pub fn a_omega_vs_pressure(
    map: &RationalMap,
    potential: &Potential,
    omega: &OmegaSet,
    config: &OracleConfig,
    tol: &Tolerances,
) -> Result<GapReport> {
    let a = a_omega(map, omega, potential)?;
    let anchor = config.anchor_for(map, omega, tol)?;
    let estimate = pressure_tree(map, potential, anchor, config.tree_depth, config.extrapolation, tol)?;
    Ok(GapReport::from_estimate(a, estimate, config.zero_tol))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: f64,
    pub p_tree: Option<f64>,
    pub p_periodic: Option<f64>,
    pub p_ulam: Option<f64>,
    pub n: usize,
    pub tail_width: f64,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureCurve {
    pub rows: Vec<CurveRow>,
    /// log d, the value at t = 0.
    pub intercept: f64,
    pub notes: Vec<String>,
}

/// t ↦ P(φ_t) by the requested oracles (tree, periodic, ulam). Ulam uses
/// `config.ulam` or its defaults. Failures are recorded per cell.
pub fn pressure_curve(
    map: &RationalMap,
    t_values: &[f64],
    omega: &OmegaSet,
    config: &OracleConfig,
    methods: &[Method],
    tol: &Tolerances,
) -> Result<PressureCurve> {
    if t_values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("t values must be sorted".into()));
    }
    if methods.contains(&Method::Separated) {
        return Err(Error::InvalidArgument(
            "the separated-set oracle does not produce curves".into(),
        ));
    }
    let mut notes = Vec::new();
    let tree = if methods.contains(&Method::Tree) {
        let anchor = config.anchor_for(map, omega, tol)?;
        Some(GeometricTree::new(map, anchor, config.tree_depth, tol))
    } else {
        None
    };
    let periodic = methods
        .contains(&Method::Periodic)
        .then(|| PeriodicData::new(map, config.periodic_depth, tol));
    let ulam_config = config.ulam.clone().unwrap_or_default();
    let ulam = match methods.contains(&Method::Ulam).then_some(&ulam_config) {
        Some(uc) => Some(
            generic_anchor(map, omega, tol)
                .and_then(|a| UlamGrid::new(map, a, uc, tol))
                .and_then(|g| g.log_derivatives(map).map(|l| (g, l))),
        ),
        None => None,
    };
    if let Some(Err(e)) = &tree {
        notes.push(format!("tree oracle unavailable: {e}"));
    }
    if let Some(Err(e)) = &periodic {
        notes.push(format!("periodic oracle unavailable: {e}"));
    }
    if let Some(Err(e)) = &ulam {
        notes.push(format!("ulam oracle unavailable: {e}"));
    }
    let mut rows = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let mut errors = Vec::new();
        let (p_tree, tail_width) = match &tree {
            Some(Ok(g)) => {
                let e = g.pressure(t, config.extrapolation);
                (Some(e.value), e.tail_width)
            }
            Some(Err(e)) => {
                errors.push(format!("tree: {e}"));
                (None, f64::INFINITY)
            }
            None => (None, f64::NAN),
        };
        let p_periodic = match &periodic {
            Some(Ok(p)) => Some(p.pressure_geometric(t, Extrapolation::Last).value),
            Some(Err(e)) => {
                errors.push(format!("periodic: {e}"));
                None
            }
            None => None,
        };
        let p_ulam = match &ulam {
            Some(Ok((grid, logs))) => {
                let w: Vec<f64> = logs.iter().map(|l| -t * l).collect();
                match grid.pressure_from_weights(&w, ulam_config.max_iterations) {
                    Ok(e) => Some(e.value),
                    Err(e) => {
                        errors.push(format!("ulam: {e}"));
                        None
                    }
                }
            }
            Some(Err(e)) => {
                errors.push(format!("ulam: {e}"));
                None
            }
            None => None,
        };
        rows.push(CurveRow {
            t,
            p_tree,
            p_periodic,
            p_ulam,
            n: config.tree_depth,
            tail_width,
            errors,
        });
    }
    Ok(PressureCurve {
        rows,
        intercept: (map.degree() as f64).ln(),
        notes,
    })
}

// ---------------------------------------------------------------------------
// Bowen root

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMode {
    /// P crosses 0 transversally: h = inf{t : P(t) < 0}.
    Crossing,
    /// P decreases onto a flat tail at 0: h = inf{t : P(t) < zero_tol}.
    Threshold,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BowenRoot {
    pub h: f64,
    pub mode: RootMode,
    pub zero_tol: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub tail_width: f64,
    pub tree_depth: usize,
}

/// Bisection for the first t at which the tree pressure of φ_t drops below
/// the threshold (zero_tol on parabolic maps, 0 otherwise).
pub fn bowen_root(
    map: &RationalMap,
    omega: &OmegaSet,
    config: &OracleConfig,
    tol: &Tolerances,
) -> Result<BowenRoot> {
    let anchor = config.anchor_for(map, omega, tol)?;
    let tree = GeometricTree::new(map, anchor, config.tree_depth, tol)?;
    let (mode, threshold) = if omega.is_empty() {
        (RootMode::Crossing, 0.0)
    } else {
        (RootMode::Threshold, config.zero_tol)
    };
    let mut evaluations = 0;
    let mut p = |t: f64| {
        evaluations += 1;
        tree.pressure(t, config.extrapolation).value
    };
    if !(p(0.0) > threshold) {
        return Err(Error::NoBracket("P(φ_0) is not above the threshold".into()));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !(p(hi) < threshold) {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::NoBracket(format!(
                "P(φ_t) stays above {threshold} for t up to 64"
            )));
        }
    }
    let bracket = (lo, hi);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    let tail_width = tree.pressure(h, config.extrapolation).tail_width;
    Ok(BowenRoot {
        h,
        mode,
        zero_tol: threshold,
        bracket,
        evaluations,
        tail_width,
        tree_depth: config.tree_depth,
    })
}

// ---------------------------------------------------------------------------
// Equilibrium measures

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedPointMeasure {
    pub atoms: Vec<(Complex64, f64)>,
}

impl WeightedPointMeasure {
    /// Normalises nonnegative weights to total mass 1.
    pub fn new(atoms: Vec<(Complex64, f64)>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.1 >= 0.0) || !a.1.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total = pairwise_sum(&atoms.iter().map(|a| a.1).collect::<Vec<_>>());
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("measure has zero mass".into()));
        }
        Ok(Self {
            atoms: atoms.into_iter().map(|(z, w)| (z, w / total)).collect(),
        })
    }

    pub fn point_mass(z: Complex64) -> Self {
        Self { atoms: vec![(z, 1.0)] }
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|a| a.1).collect::<Vec<_>>())
    }

    /// Mass of the open 2β-neighbourhood of the given centers.
    pub fn mass_near(&self, centers: &[Complex64], radius: f64) -> f64 {
        let w: Vec<f64> = self
            .atoms
            .iter()
            .map(|&(z, w)| {
                if centers.iter().any(|&c| point_distance(z, c) < radius) {
                    w
                } else {
                    0.0
                }
            })
            .collect();
        pairwise_sum(&w)
    }
}

fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn normalised_from_log_weights(points: Vec<Complex64>, log_w: &[f64]) -> Result<WeightedPointMeasure> {
    let total = log_sum_exp(log_w);
    if !total.is_finite() {
        return Err(Error::InvalidArgument("no atoms to normalise".into()));
    }
    WeightedPointMeasure::new(
        points
            .into_iter()
            .zip(log_w)
            .map(|(z, l)| (z, (l - total).exp()))
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureSource {
    Tree,
    Periodic,
}

/// Atoms at depth-n tree leaves (or period-n points on J) weighted by e^{S_nφ}.
pub fn equilibrium_approx(
    map: &RationalMap,
    potential: &Potential,
    n: usize,
    source: MeasureSource,
    anchor: Complex64,
    tol: &Tolerances,
) -> Result<WeightedPointMeasure> {
    match source {
        MeasureSource::Tree => {
            let (tree, _) = build_tree(map, anchor, n, tol)?;
            let sums = tree_birkhoff_sums(&tree, |z| potential.eval(map, z))?;
            normalised_from_log_weights(tree.leaves(), &sums[n])
        }
        MeasureSource::Periodic => {
            let data = PeriodicData::new(map, n, tol)?;
            let points: Vec<Complex64> = data.levels[n - 1].iter().map(|p| p.0).collect();
            let log_w: Vec<f64> = points
                .par_iter()
                .map(|&z| birkhoff_sum_along(map, potential, &map.orbit(z, n)))
                .collect::<Result<_>>()?;
            normalised_from_log_weights(points, &log_w)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub pressure: f64,
    pub integral: f64,
    pub entropy_estimate: f64,
    pub omega_mass: f64,
    pub beta: f64,
    pub entropy_positive: bool,
    pub omega_mass_ok: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Entropy by the variational identity h = P − ∫φ dμ, and the mass μ puts
/// on B(Ω, 2β). Atoms where φ cannot be evaluated are dropped with a note.
pub fn equilibrium_diagnostics(
    map: &RationalMap,
    potential: &Potential,
    measure: &WeightedPointMeasure,
    omega: &OmegaSet,
    beta: f64,
    pressure: f64,
) -> EquilibriumReport {
    let mut notes = Vec::new();
    let mut dropped = 0.0;
    let terms: Vec<f64> = measure
        .atoms
        .iter()
        .map(|&(z, w)| match potential.eval(map, z) {
            Ok(v) => w * v,
            Err(_) => {
                dropped += w;
                0.0
            }
        })
        .collect();
    let kept = 1.0 - dropped;
    let integral = if kept > 0.0 { pairwise_sum(&terms) / kept } else { f64::NAN };
    if dropped > 0.0 {
        notes.push(format!("potential undefined on atoms of total mass {dropped:.3e}"));
    }
    let omega_mass = if omega.is_empty() {
        notes.push("Ω is empty; its mass is reported as 0".into());
        0.0
    } else {
        measure.mass_near(&omega.points(), 2.0 * beta)
    };
    let entropy_estimate = pressure - integral;
    let entropy_positive = entropy_estimate > 0.0;
    let omega_mass_ok = omega_mass < 0.5;
    EquilibriumReport {
        pressure,
        integral,
        entropy_estimate,
        omega_mass,
        beta,
        entropy_positive,
        omega_mass_ok,
        pass: entropy_positive && omega_mass_ok,
        notes,
    }
}
