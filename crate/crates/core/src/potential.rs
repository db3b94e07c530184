//! Potentials on the Julia set and their Birkhoff sums.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MilnorMetric;
use crate::rational_map::RationalMap;

/// Which conformal density measures |f'| in the geometric potential.
#[derive(Clone, Debug, Default)]
pub enum GeometricMetric {
    #[default]
    Euclidean,
    Milnor(Arc<MilnorMetric>),
}

#[derive(Clone)]
pub enum Potential {
    /// -t log |f'(z)| in the chosen metric.
    Geometric { t: f64, metric: GeometricMetric },
    Constant(f64),
    Combination(Vec<(f64, Potential)>),
    /// Nearest-neighbour lookup in a table of (point, value).
    Table(Arc<Vec<(Complex64, f64)>>),
    Function {
        name: String,
        f: Arc<dyn Fn(Complex64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({self})")
    }
}

impl Potential {
    pub fn geometric(t: f64) -> Self {
        Potential::Geometric {
            t,
            metric: GeometricMetric::Euclidean,
        }
    }

    pub fn geometric_milnor(t: f64, metric: Arc<MilnorMetric>) -> Self {
        Potential::Geometric {
            t,
            metric: GeometricMetric::Milnor(metric),
        }
    }

    pub fn constant(c: f64) -> Self {
        Potential::Constant(c)
    }

    pub fn from_fn(name: &str, f: impl Fn(Complex64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Function {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn table(entries: Vec<(Complex64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty potential table".into()));
        }
        Ok(Potential::Table(Arc::new(entries)))
    }

    /// φ + c.
    pub fn shifted(&self, c: f64) -> Self {
        Potential::Combination(vec![(1.0, self.clone()), (1.0, Potential::Constant(c))])
    }

    /// Some(c) when the potential is a constant in disguise.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Potential::Constant(c) => Some(*c),
            Potential::Geometric { t, .. } if *t == 0.0 => Some(0.0),
            Potential::Combination(parts) => parts
                .iter()
                .try_fold(0.0, |acc, (w, p)| p.as_constant().map(|c| acc + w * c)),
            _ => None,
        }
    }

    /// The geometric parameter t when the potential is exactly φ_t.
    pub fn geometric_t(&self) -> Option<f64> {
        match self {
            Potential::Geometric { t, .. } => Some(*t),
            _ => None,
        }
    }

    pub fn eval(&self, map: &RationalMap, z: Complex64) -> Result<f64> {
        match self {
            Potential::Constant(c) => Ok(*c),
            Potential::Geometric { t, metric } => {
                if *t == 0.0 {
                    return Ok(0.0);
                }
                let d = map.derivative(z)?.norm();
                if d < 1e-300 {
                    return Err(Error::NearCritical(z));
                }
                let norm = match metric {
                    GeometricMetric::Euclidean => d,
                    GeometricMetric::Milnor(m) => m.derivative_norm(map, z)?,
                };
                Ok(-t * norm.ln())
            }
            Potential::Combination(parts) => parts
                .iter()
                .try_fold(0.0, |acc, (w, p)| Ok(acc + w * p.eval(map, z)?)),
            Potential::Table(entries) => {
                let nearest = entries
                    .iter()
                    .min_by(|a, b| (a.0 - z).norm().total_cmp(&(b.0 - z).norm()))
                    .expect("table is nonempty");
                Ok(nearest.1)
            }
            Potential::Function { f, .. } => {
                let v = f(z);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidArgument(format!("potential not finite at {z}")))
                }
            }
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Geometric { t, metric } => match metric {
                GeometricMetric::Euclidean => write!(f, "geometric:t={t}"),
                GeometricMetric::Milnor(_) => write!(f, "geometric:t={t}:milnor"),
            },
            Potential::Constant(c) => write!(f, "const:c={c}"),
            Potential::Combination(parts) => {
                write!(f, "mix:")?;
                for (i, (w, p)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    write!(f, "{w}*{p}")?;
                }
                Ok(())
            }
            Potential::Table(entries) => write!(f, "table:{}", entries.len()),
            Potential::Function { name, .. } => write!(f, "fn:{name}"),
        }
    }
}

impl Serialize for Potential {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Potential {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn parse_param(body: &str, key: &str) -> Result<f64> {
    let value = body
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected '{key}=<number>', got '{body}'")))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: '{value}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite parameter '{value}'")));
    }
    Ok(v)
}

/// Splits on '+' that is not the sign of an exponent.
fn split_terms(body: &str) -> Vec<&str> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..bytes.len() {
        if bytes[i] == b'+' && i > start {
            let prev = bytes[i - 1];
            if prev != b'e' && prev != b'E' {
                out.push(&body[start..i]);
                start = i + 1;
            }
        }
    }
    out.push(&body[start..]);
    out
}

impl FromStr for Potential {
    type Err = Error;

    /// Accepts `geometric:t=1.0`, `const:c=0.3` and
    /// `mix:0.5*geometric:t=1+0.5*const:c=0`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("potential spec without kind: '{s}'")))?;
        match kind {
            "geometric" => Ok(Potential::geometric(parse_param(body, "t")?)),
            "const" => Ok(Potential::Constant(parse_param(body, "c")?)),
            "mix" => {
                let mut parts = Vec::new();
                for term in split_terms(body) {
                    let (w, inner) = term
                        .split_once('*')
                        .ok_or_else(|| Error::Parse(format!("mix term without weight: '{term}'")))?;
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad mix weight '{w}'")))?;
                    let inner: Potential = inner.parse()?;
                    if matches!(inner, Potential::Combination(_)) {
                        return Err(Error::Parse("nested mix is not supported".into()));
                    }
                    parts.push((w, inner));
                }
                Ok(Potential::Combination(parts))
            }
            other => Err(Error::Parse(format!("unknown potential kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSum {
    pub value: f64,
    pub length: usize,
}

/// S_nφ(z) = φ(z) + φ(fz) + ... + φ(f^{n-1}z).
pub fn birkhoff_sum(
    map: &RationalMap,
    potential: &Potential,
    z: Complex64,
    n: usize,
) -> Result<BirkhoffSum> {
    if n == 0 {
        return Err(Error::InvalidArgument("Birkhoff sum length must be >= 1".into()));
    }
    let mut x = z;
    let mut value = 0.0;
    for index in 0..n {
        value += potential.eval(map, x).map_err(|e| Error::OrbitEvaluation {
            index,
            source: Box::new(e),
        })?;
        x = map.evaluate(x);
    }
    Ok(BirkhoffSum { value, length: n })
}

/// Birkhoff sum over an already computed orbit segment.
pub fn birkhoff_sum_along(map: &RationalMap, potential: &Potential, orbit: &[Complex64]) -> Result<f64> {
    orbit.iter().enumerate().try_fold(0.0, |acc, (index, &x)| {
        Ok(acc
            + potential.eval(map, x).map_err(|e| Error::OrbitEvaluation {
                index,
                source: Box::new(e),
            })?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn geometric_on_circle() {
        let f = RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let z = Complex64::from_polar(1.0, 0.3);
        let v = Potential::geometric(1.0).eval(&f, z).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-14);
        let s = birkhoff_sum(&f, &Potential::geometric(0.7), z, 9).unwrap();
        assert!((s.value + 9.0 * 0.7 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn geometric_at_parabolic_point_is_zero() {
        let f = RationalMap::polynomial(&[0.25, 0.0, 1.0]).unwrap();
        assert!(Potential::geometric(1.0).eval(&f, c(0.5, 0.0)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn near_critical_is_signalled() {
        let f = RationalMap::polynomial(&[0.25, 0.0, 1.0]).unwrap();
        let e = Potential::geometric(1.0).eval(&f, c(0.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::NearCritical(_)));
        let e = birkhoff_sum(&f, &Potential::geometric(1.0), c(0.0, 0.0), 3).unwrap_err();
        assert!(matches!(e, Error::OrbitEvaluation { index: 0, .. }));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(
            "geometric:t=1.0".parse::<Potential>().unwrap().geometric_t(),
            Some(1.0)
        );
        assert_eq!("const:c=0.3".parse::<Potential>().unwrap().as_constant(), Some(0.3));
        let mix: Potential = "mix:0.5*geometric:t=1+0.5*const:c=0".parse().unwrap();
        match &mix {
            Potential::Combination(parts) => assert_eq!(parts.len(), 2),
            _ => panic!("expected a combination"),
        }
        let exp: Potential = "mix:1e+0*const:c=2e-1+1*const:c=1".parse().unwrap();
        assert!((exp.as_constant().unwrap() - 1.2).abs() < 1e-15);
        for bad in ["", "geometric", "geometric:s=1", "const:c=abc", "wave:k=1", "mix:geometric:t=1"] {
            assert!(bad.parse::<Potential>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_roundtrip() {
        for s in ["geometric:t=1.5", "const:c=-0.25", "mix:0.5*geometric:t=1+0.5*const:c=0"] {
            let p: Potential = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn table_lookup() {
        let f = RationalMap::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let p = Potential::table(vec![(c(0.0, 0.0), 1.0), (c(1.0, 0.0), 2.0)]).unwrap();
        assert_eq!(p.eval(&f, c(0.9, 0.1)).unwrap(), 2.0);
        assert_eq!(p.eval(&f, c(0.1, 0.1)).unwrap(), 1.0);
    }
}
