//! Rational maps of the Riemann sphere: evaluation in two charts, derivatives,
//! critical points, fibers and full preimage trees.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::poly::{self, Polynomial};

/// Marker for the point at infinity.
pub const INFINITY: Complex64 = Complex64::new(f64::INFINITY, 0.0);

pub fn is_infinite(z: Complex64) -> bool {
    !(z.re.is_finite() && z.im.is_finite())
}

/// f = P/Q with P, Q coprime and d = max(deg P, deg Q) >= 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapFile", into = "MapFile")]
pub struct RationalMap {
    numerator: Polynomial,
    denominator: Polynomial,
    degree: usize,
    #[serde(skip)]
    dnum: Polynomial,
    #[serde(skip)]
    dden: Polynomial,
}

/// On-disk form: `{"numerator": [[re, im], ...], "denominator": [[re, im], ...]}`,
/// coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub numerator: Vec<[f64; 2]>,
    pub denominator: Vec<[f64; 2]>,
}

impl TryFrom<MapFile> for RationalMap {
    type Error = Error;

    fn try_from(file: MapFile) -> Result<Self> {
        let conv = |v: &[[f64; 2]]| v.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        RationalMap::new(conv(&file.numerator), conv(&file.denominator))
    }
}

impl From<RationalMap> for MapFile {
    fn from(map: RationalMap) -> Self {
        let conv = |p: &Polynomial| p.coeffs().iter().map(|c| [c.re, c.im]).collect();
        MapFile {
            numerator: conv(&map.numerator),
            denominator: conv(&map.denominator),
        }
    }
}

impl RationalMap {
    /// Validates degree and coprimality, then rescales so the larger-degree
    /// polynomial is monic (the numerator wins ties).
    pub fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> Result<Self> {
        let p = Polynomial::new(numerator);
        let q = Polynomial::new(denominator);
        if q.is_zero() {
            return Err(Error::InvalidMap("denominator is identically zero".into()));
        }
        if p.is_zero() {
            return Err(Error::InvalidMap("numerator is identically zero".into()));
        }
        if p.coeffs().iter().chain(q.coeffs()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        let (dp, dq) = (p.degree().unwrap(), q.degree().unwrap());
        let degree = dp.max(dq);
        if degree < 2 {
            return Err(Error::InvalidMap(format!("degree {degree} < 2")));
        }
        // Coprimality: no root of the lower-degree factor annihilates the other.
        let (low, high) = if dp <= dq { (&p, &q) } else { (&q, &p) };
        if low.degree().unwrap() >= 1 {
            for r in poly::roots(low, 1e-14)? {
                if high.relative_residual(r) < 1e-8 {
                    return Err(Error::InvalidMap(format!(
                        "numerator and denominator share the root {r}"
                    )));
                }
            }
        }
        let lead = if dp >= dq { p.leading() } else { q.leading() };
        let s = lead.inv();
        Ok(Self::from_parts(p.scale(s), q.scale(s)))
    }

    /// Polynomial map with the given ascending real coefficients.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        Self::new(
            coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            vec![Complex64::new(1.0, 0.0)],
        )
    }

    fn from_parts(numerator: Polynomial, denominator: Polynomial) -> Self {
        let degree = numerator
            .degree()
            .unwrap_or(0)
            .max(denominator.degree().unwrap_or(0));
        Self {
            dnum: numerator.derivative(),
            dden: denominator.derivative(),
            numerator,
            denominator,
            degree,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MapFile::from(self.clone())).expect("map serializes")
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.denominator.degree() == Some(0)
    }

    fn deg_p(&self) -> usize {
        self.numerator.degree().unwrap_or(0)
    }

    fn deg_q(&self) -> usize {
        self.denominator.degree().unwrap_or(0)
    }

    pub fn value_at_infinity(&self) -> Complex64 {
        match self.deg_p().cmp(&self.deg_q()) {
            std::cmp::Ordering::Greater => INFINITY,
            std::cmp::Ordering::Equal => self.numerator.leading() / self.denominator.leading(),
            std::cmp::Ordering::Less => Complex64::new(0.0, 0.0),
        }
    }

    /// P(z)/Q(z) in the z-chart.
    pub fn evaluate_direct(&self, z: Complex64) -> Complex64 {
        let q = self.denominator.eval(z);
        let p = self.numerator.eval(z);
        if q.norm() == 0.0 {
            return INFINITY;
        }
        p / q
    }

    /// P(z)/Q(z) computed through w = 1/z; accurate for large |z|.
    pub fn evaluate_inverted(&self, z: Complex64) -> Complex64 {
        let w = z.inv();
        let (dp, dq) = (self.deg_p(), self.deg_q());
        let num = self.numerator.reversed(dp).eval(w);
        let den = self.denominator.reversed(dq).eval(w);
        if den.norm() == 0.0 {
            return INFINITY;
        }
        let ratio = num / den;
        if dp >= dq {
            ratio * z.powu((dp - dq) as u32)
        } else {
            ratio * w.powu((dq - dp) as u32)
        }
    }

    /// Total on the sphere: infinity in, infinity (or the limit value) out.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        if is_infinite(z) {
            return self.value_at_infinity();
        }
        let v = if z.norm() > 1.0 {
            self.evaluate_inverted(z)
        } else {
            self.evaluate_direct(z)
        };
        if is_infinite(v) || v.re.is_nan() || v.im.is_nan() {
            INFINITY
        } else {
            v
        }
    }

    pub fn iterate(&self, z: Complex64, n: usize) -> Complex64 {
        (0..n).fold(z, |acc, _| self.evaluate(acc))
    }

    /// Forward orbit (z, f z, ..., f^{n-1} z).
    pub fn orbit(&self, z: Complex64, n: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(n);
        let mut x = z;
        for _ in 0..n {
            out.push(x);
            x = self.evaluate(x);
        }
        out
    }

    /// f'(z) = (P'Q - PQ')/Q^2 in the finite chart.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        if is_infinite(z) {
            return Err(Error::PoleOfDerivative(z));
        }
        let q = self.denominator.eval(z);
        if q.norm() == 0.0 {
            return Err(Error::PoleOfDerivative(z));
        }
        let p = self.numerator.eval(z);
        let d = (self.dnum.eval(z) * q - p * self.dden.eval(z)) / (q * q);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::PoleOfDerivative(z))
        }
    }

    /// (f^n)'(z) along the forward orbit.
    pub fn iterate_derivative(&self, z: Complex64, n: usize) -> Result<Complex64> {
        let mut x = z;
        let mut d = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            d *= self.derivative(x)?;
            x = self.evaluate(x);
        }
        Ok(d)
    }

    /// Derivative of 1/f(1/w) at w = 0; only meaningful when f fixes infinity.
    pub fn multiplier_at_infinity(&self) -> Result<Complex64> {
        let g = self.conjugate_by_inversion_about(Complex64::new(0.0, 0.0));
        g.derivative(Complex64::new(0.0, 0.0))
    }

    /// P'Q - PQ'.
    pub fn wronskian(&self) -> Polynomial {
        self.dnum
            .mul(&self.denominator)
            .sub(&self.numerator.mul(&self.dden))
    }

    /// Distinct critical points: the roots of P'Q - PQ' plus infinity when the
    /// count 2d - 2 is not reached by finite roots. Infinity, when present, is last.
    pub fn critical_points(&self, tol: &Tolerances) -> Result<Vec<Complex64>> {
        let w = self.wronskian();
        let finite_count = w.degree().unwrap_or(0);
        let mut out = Vec::new();
        if finite_count >= 1 {
            let raw = poly::roots(&w, tol.polish)?;
            let radii: Vec<f64> = raw
                .iter()
                .map(|&z| {
                    let (v, dv) = w.eval_with_derivative(z);
                    if dv.norm() == 0.0 {
                        0.0
                    } else {
                        finite_count as f64 * (v / dv).norm()
                    }
                })
                .collect();
            for group in poly::cluster_points(&raw, &radii, tol.root_cluster) {
                let centroid =
                    group.iter().map(|&i| raw[i]).sum::<Complex64>() / group.len() as f64;
                out.push(centroid);
            }
            poly::sort_lex(&mut out);
        }
        if finite_count < 2 * self.degree - 2 {
            out.push(INFINITY);
        }
        Ok(out)
    }

    /// The d points of f^{-1}(w) with multiplicity, ordered by (re, im).
    /// Errors when the fiber equation P - wQ drops degree (a preimage sits at infinity).
    pub fn preimages(&self, w: Complex64, tol: &Tolerances) -> Result<Vec<Complex64>> {
        if is_infinite(w) {
            let mut out = poly::roots(&self.denominator, tol.polish)?;
            for _ in self.deg_q()..self.degree {
                out.push(INFINITY);
            }
            return Ok(out);
        }
        let d = self.degree;
        let lead = self.numerator.coeff(d) - w * self.denominator.coeff(d);
        let scale = self.numerator.coeff(d).norm() + w.norm() * self.denominator.coeff(d).norm();
        if lead.norm() <= 1e-13 * scale.max(1e-300) {
            return Err(Error::DegenerateFiber(w));
        }
        let fiber = self.numerator.sub(&self.denominator.scale(w));
        let roots = poly::roots(&fiber, tol.polish)?;
        let bound = tol.fiber * w.norm().max(1.0);
        for &z in &roots {
            let residual = (self.evaluate(z) - w).norm();
            if !(residual < bound) {
                return Err(Error::FiberResidual {
                    residual,
                    tolerance: bound,
                });
            }
        }
        Ok(roots)
    }

    /// Full depth-n preimage tree anchored at w.
    pub fn preimage_tree(&self, w: Complex64, n: usize, tol: &Tolerances) -> Result<PreimageTree> {
        if n == 0 {
            return Err(Error::InvalidArgument("tree depth must be >= 1".into()));
        }
        let needed = (self.degree as f64).powi(n as i32);
        if needed > tol.node_budget as f64 {
            return Err(Error::BudgetExceeded {
                what: "preimage tree leaves",
                needed: needed.min(usize::MAX as f64) as usize,
                budget: tol.node_budget,
            });
        }
        let mut levels = vec![vec![TreeNode {
            z: w,
            parent: u32::MAX,
            digit: 0,
        }]];
        for _ in 0..n {
            let prev = levels.last().unwrap();
            let next: Vec<Vec<TreeNode>> = prev
                .par_iter()
                .enumerate()
                .map(|(i, node)| {
                    self.preimages(node.z, tol).map(|pre| {
                        pre.into_iter()
                            .enumerate()
                            .map(|(k, z)| TreeNode {
                                z,
                                parent: i as u32,
                                digit: k as u16,
                            })
                            .collect()
                    })
                })
                .collect::<Result<_>>()?;
            levels.push(next.concat());
        }
        Ok(PreimageTree {
            root: w,
            depth: n,
            levels,
        })
    }

    /// Homogenised P(a, b) = sum p_j a^j b^{d-j} and the same for Q.
    pub fn homogeneous(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        let d = self.degree;
        let mut pa = Complex64::new(0.0, 0.0);
        let mut qb = Complex64::new(0.0, 0.0);
        let mut apow = Complex64::new(1.0, 0.0);
        let bpows: Vec<Complex64> = (0..=d).map(|k| b.powu(k as u32)).collect();
        for j in 0..=d {
            let m = apow * bpows[d - j];
            pa += self.numerator.coeff(j) * m;
            qb += self.denominator.coeff(j) * m;
            apow *= a;
        }
        (pa, qb)
    }

    /// Homogeneous step with derivatives carried along:
    /// returns (P(a,b), Q(a,b), d/dz P(a,b), d/dz Q(a,b)) given a', b'.
    pub fn homogeneous_with_derivative(
        &self,
        a: Complex64,
        b: Complex64,
        da: Complex64,
        db: Complex64,
    ) -> [Complex64; 4] {
        let d = self.degree;
        let zero = Complex64::new(0.0, 0.0);
        let apows: Vec<Complex64> = (0..=d).map(|k| a.powu(k as u32)).collect();
        let bpows: Vec<Complex64> = (0..=d).map(|k| b.powu(k as u32)).collect();
        let (mut p, mut q, mut pa, mut pb, mut qa, mut qb) = (zero, zero, zero, zero, zero, zero);
        for j in 0..=d {
            let (cp, cq) = (self.numerator.coeff(j), self.denominator.coeff(j));
            let m = apows[j] * bpows[d - j];
            p += cp * m;
            q += cq * m;
            if j >= 1 {
                let m_a = apows[j - 1] * bpows[d - j] * j as f64;
                pa += cp * m_a;
                qa += cq * m_a;
            }
            if j < d {
                let m_b = apows[j] * bpows[d - j - 1] * (d - j) as f64;
                pb += cp * m_b;
                qb += cq * m_b;
            }
        }
        [p, q, pa * da + pb * db, qa * da + qb * db]
    }

    /// f o g as a rational map of degree deg f * deg g.
    pub fn compose(&self, g: &RationalMap) -> RationalMap {
        let d = self.degree;
        let gp_pows: Vec<Polynomial> = (0..=d).map(|k| g.numerator.pow(k)).collect();
        let gq_pows: Vec<Polynomial> = (0..=d).map(|k| g.denominator.pow(k)).collect();
        let mut num = Polynomial::zero();
        let mut den = Polynomial::zero();
        for j in 0..=d {
            let m = gp_pows[j].mul(&gq_pows[d - j]);
            num = num.add(&m.scale(self.numerator.coeff(j)));
            den = den.add(&m.scale(self.denominator.coeff(j)));
        }
        let lead = if num.degree() >= den.degree() {
            num.leading()
        } else {
            den.leading()
        };
        let s = lead.inv();
        Self::from_parts(num.scale(s), den.scale(s))
    }

    /// f^k by repeated composition, refused above `budget` degree.
    pub fn iterate_map(&self, k: usize, budget: usize) -> Result<RationalMap> {
        if k == 0 {
            return Err(Error::InvalidArgument("iterate index must be >= 1".into()));
        }
        let needed = (self.degree as f64).powi(k as i32);
        if needed > budget as f64 {
            return Err(Error::BudgetExceeded {
                what: "iterate degree",
                needed: needed.min(usize::MAX as f64) as usize,
                budget,
            });
        }
        let mut out = self.clone();
        for _ in 1..k {
            out = self.compose(&out);
        }
        Ok(out)
    }

    /// g = M o f o M^{-1} with M(z) = 1/(z - c). M sends c to infinity and
    /// infinity to 0, so cycles through infinity become finite for g.
    pub fn conjugate_by_inversion_about(&self, c: Complex64) -> RationalMap {
        // M^{-1}(u) = (c u + 1)/u, so f(M^{-1} u) = P(cu+1, u)/Q(cu+1, u).
        let x = Polynomial::new(vec![Complex64::new(1.0, 0.0), c]);
        let y = Polynomial::identity();
        let d = self.degree;
        let xp: Vec<Polynomial> = (0..=d).map(|k| x.pow(k)).collect();
        let yp: Vec<Polynomial> = (0..=d).map(|k| y.pow(k)).collect();
        let mut ph = Polynomial::zero();
        let mut qh = Polynomial::zero();
        for j in 0..=d {
            let m = xp[j].mul(&yp[d - j]);
            ph = ph.add(&m.scale(self.numerator.coeff(j)));
            qh = qh.add(&m.scale(self.denominator.coeff(j)));
        }
        // M(v) = 1/(v - c) applied to v = ph/qh.
        let num = qh.clone();
        let den = ph.sub(&qh.scale(c));
        Self::from_parts(num, den)
    }

    /// Maps a point through M(z) = 1/(z - c).
    pub fn inversion_chart(c: Complex64, z: Complex64) -> Complex64 {
        if is_infinite(z) {
            Complex64::new(0.0, 0.0)
        } else {
            (z - c).inv()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub z: Complex64,
    /// Index of the image node in the previous level.
    pub parent: u32,
    /// Position of this node in the sorted fiber of its parent.
    pub digit: u16,
}

/// Level k holds the nodes of f^{-k}(root), children listed parent by parent.
#[derive(Clone, Debug)]
pub struct PreimageTree {
    pub root: Complex64,
    pub depth: usize,
    pub levels: Vec<Vec<TreeNode>>,
}

impl PreimageTree {
    pub fn level(&self, k: usize) -> &[TreeNode] {
        &self.levels[k]
    }

    pub fn leaves(&self) -> Vec<Complex64> {
        self.levels[self.depth].iter().map(|n| n.z).collect()
    }

    /// Digits from level 1 down to the leaf.
    pub fn branch_code(&self, leaf: usize) -> Vec<u16> {
        let mut code = Vec::with_capacity(self.depth);
        let mut idx = leaf;
        for k in (1..=self.depth).rev() {
            let node = self.levels[k][idx];
            code.push(node.digit);
            idx = node.parent as usize;
        }
        code.reverse();
        code
    }

    /// Forward orbit of the node at (level, index) up to but excluding the
    /// root: `level` points, starting with the node itself.
    pub fn forward_orbit(&self, level: usize, index: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(level);
        let mut idx = index;
        for k in (1..=level).rev() {
            let node = self.levels[k][idx];
            out.push(node.z);
            idx = node.parent as usize;
        }
        out
    }
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
    fn evaluate_examples() {
        assert_eq!(square().evaluate(c(1.0, 0.0)), c(1.0, 0.0));
        assert!((blaschke().evaluate(c(1.0, 0.0)) - 1.0).norm() < 1e-15);
        assert!((quad().evaluate(c(0.5, 0.0)) - 0.5).norm() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(square().derivative(c(1.0, 0.0)).unwrap(), c(2.0, 0.0));
        // 16 z / (z^2 + 3)^2 at z = 1
        assert!((blaschke().derivative(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-14);
        assert!((quad().derivative(c(0.5, 0.0)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn derivative_pole_is_reported() {
        let f = RationalMap::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(matches!(f.derivative(c(0.0, 0.0)), Err(Error::PoleOfDerivative(_))));
    }

    #[test]
    fn critical_point_examples() {
        let tol = Tolerances::default();
        for f in [square(), quad(), blaschke()] {
            let cp = f.critical_points(&tol).unwrap();
            assert_eq!(cp.len(), 2, "{cp:?}");
            assert!(cp[0].norm() < 1e-12);
            assert!(is_infinite(cp[1]));
        }
    }

    #[test]
    fn preimage_examples() {
        let tol = Tolerances::default();
        let r = square().preimages(c(1.0, 0.0), &tol).unwrap();
        assert!((r[0] + 1.0).norm() < 1e-15 && (r[1] - 1.0).norm() < 1e-15);
        let r = square().preimages(c(0.0, 0.0), &tol).unwrap();
        assert!(r.iter().all(|z| z.norm() < 1e-12));
        let r = quad().preimages(c(0.5, 0.0), &tol).unwrap();
        assert!((r[0] + 0.5).norm() < 1e-15 && (r[1] - 0.5).norm() < 1e-15);
    }

    #[test]
    fn degenerate_fiber_is_signalled() {
        // f(infinity) = 3 for the Blaschke map, so the fiber over 3 drops degree.
        let tol = Tolerances::default();
        assert!(matches!(
            blaschke().preimages(c(3.0, 0.0), &tol),
            Err(Error::DegenerateFiber(_))
        ));
    }

    #[test]
    fn tree_of_square_gives_fourth_roots() {
        let tol = Tolerances::default();
        let tree = square().preimage_tree(c(1.0, 0.0), 2, &tol).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 4);
        for target in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(leaves.iter().any(|z| (z - target).norm() < 1e-14));
        }
    }

    #[test]
    fn depth_one_tree_matches_fiber() {
        let tol = Tolerances::default();
        let w = c(0.3, 0.7);
        let f = blaschke();
        let tree = f.preimage_tree(w, 1, &tol).unwrap();
        assert_eq!(tree.leaves(), f.preimages(w, &tol).unwrap());
    }

    #[test]
    fn tree_leaves_return_to_anchor() {
        let tol = Tolerances::default();
        let f = quad();
        let w = c(2.0, 0.0);
        let tree = f.preimage_tree(w, 3, &tol).unwrap();
        assert_eq!(tree.leaves().len(), 8);
        for z in tree.leaves() {
            assert!((f.iterate(z, 3) - w).norm() < 1e-6);
        }
    }

    #[test]
    fn tree_budget_enforced() {
        let tol = Tolerances {
            node_budget: 8,
            ..Tolerances::default()
        };
        assert!(matches!(
            square().preimage_tree(c(1.0, 0.0), 4, &tol),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn branch_codes_and_orbits() {
        let tol = Tolerances::default();
        let f = square();
        let tree = f.preimage_tree(c(0.0, 1.0), 3, &tol).unwrap();
        for leaf in 0..8 {
            let code = tree.branch_code(leaf);
            assert_eq!(code.len(), 3);
            assert!(code.iter().all(|&d| d < 2));
            let orbit = tree.forward_orbit(3, leaf);
            assert_eq!(orbit.len(), 3);
            for k in 0..2 {
                assert!((f.evaluate(orbit[k]) - orbit[k + 1]).norm() < 1e-12);
            }
        }
        let codes: std::collections::HashSet<_> = (0..8).map(|l| tree.branch_code(l)).collect();
        assert_eq!(codes.len(), 8);
    }

    #[test]
    fn rejects_common_factor_and_low_degree() {
        // (z^2 - 1)/(z - 1)
        assert!(RationalMap::new(
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)]
        )
        .is_err());
        assert!(RationalMap::polynomial(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn normalisation_makes_leading_monic() {
        let f = blaschke();
        assert!((f.numerator().leading() - 1.0).norm() < 1e-15);
        assert!((f.evaluate(c(0.2, 0.1)) - (c(0.2, 0.1).powu(2) * 3.0 + 1.0) / (c(0.2, 0.1).powu(2) + 3.0)).norm() < 1e-14);
    }

    #[test]
    fn compose_and_conjugate() {
        let f = quad();
        let f2 = f.iterate_map(2, 4096).unwrap();
        let z = c(0.3, -0.4);
        assert!((f2.evaluate(z) - f.iterate(z, 2)).norm() < 1e-13);
        // z^2 fixes infinity with multiplier 0.
        assert!(square().multiplier_at_infinity().unwrap().norm() < 1e-14);
        let g = blaschke().conjugate_by_inversion_about(c(0.5, 0.5));
        let u = RationalMap::inversion_chart(c(0.5, 0.5), z);
        let lhs = g.evaluate(u);
        let rhs = RationalMap::inversion_chart(c(0.5, 0.5), blaschke().evaluate(z));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let f = blaschke();
        let g = RationalMap::from_json(&f.to_json()).unwrap();
        assert!((g.evaluate(c(0.1, 0.2)) - f.evaluate(c(0.1, 0.2))).norm() < 1e-15);
        assert!(RationalMap::from_json("{\"numerator\": 3}").is_err());
    }
}
