use num_complex::Complex64;
use parabolic::decomposition::decompose_pattern;
use parabolic::julia::{box_counting_dimension as box_fit, sample_capped_tree, CappedTreeParams};
use parabolic::metric::{calibrate as calibrate_metric, ALPHA_LADDER, DEFAULT_TRUNCATION};
use parabolic::periodic::{a_omega as a_omega_of, omega, OmegaSet};
use parabolic::potential::{birkhoff_sum as birkhoff, Potential as CorePotential};
use parabolic::pressure::{
    bowen_root as core_bowen_root, generic_anchor, pressure_periodic, pressure_tree, pressure_ulam, Extrapolation,
    GapReport, OracleConfig, PressureEstimate as CoreEstimate, UlamConfig,
};
use parabolic::registry;
use parabolic::{Error, Tolerances};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::InvalidMap(_) | Error::InvalidArgument(_) | Error::NotParabolic { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn omega_of(map: &parabolic::RationalMap, scope: usize) -> PyResult<OmegaSet> {
    omega(map, scope, &Tolerances::default()).map_err(to_py)
}

fn extrapolation(name: &str) -> PyResult<Extrapolation> {
    match name {
        "last" => Ok(Extrapolation::Last),
        "ratio" => Ok(Extrapolation::Ratio),
        "aitken" => Ok(Extrapolation::Aitken),
        "log-corrected" => Ok(Extrapolation::LogCorrected { window: 7 }),
        other => Err(PyValueError::new_err(format!(
            "unknown extrapolation {other:?}; expected last, ratio, aitken or log-corrected"
        ))),
    }
}

/// A rational map P/Q of degree at least 2.
#[pyclass(frozen, module = "pyparabolic")]
struct RationalMap {
    inner: parabolic::RationalMap,
}

#[pymethods]
impl RationalMap {
    /// Coefficients in ascending degree.
    #[new]
    fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> PyResult<Self> {
        let inner = parabolic::RationalMap::new(numerator, denominator).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn example(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: registry::example(name).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn examples() -> Vec<&'static str> {
        registry::EXAMPLES.iter().map(|e| e.name).collect()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parabolic::RationalMap::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.evaluate(z)
    }

    fn iterate(&self, z: Complex64, n: usize) -> Complex64 {
        self.inner.iterate(z, n)
    }

    fn derivative(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.derivative(z).map_err(to_py)
    }

    fn preimages(&self, w: Complex64) -> PyResult<Vec<Complex64>> {
        self.inner.preimages(w, &Tolerances::default()).map_err(to_py)
    }

    fn critical_points(&self) -> PyResult<Vec<Complex64>> {
        self.inner.critical_points(&Tolerances::default()).map_err(to_py)
    }

    /// Points of the rationally indifferent cycles of period at most `scope`.
    #[pyo3(signature = (scope = 4))]
    fn omega(&self, scope: usize) -> PyResult<Vec<Complex64>> {
        Ok(omega_of(&self.inner, scope)?.points())
    }

    /// A sample of J by the capped inverse tree walk.
    #[pyo3(signature = (cell = 1e-3, seed = 0))]
    fn julia_sample(&self, cell: f64, seed: u64) -> PyResult<Vec<Complex64>> {
        let tol = Tolerances::default();
        let om = omega_of(&self.inner, 4)?;
        let anchor = generic_anchor(&self.inner, &om, &tol).map_err(to_py)?;
        let params = CappedTreeParams {
            cell,
            ..Default::default()
        };
        Ok(sample_capped_tree(&self.inner, anchor, params, seed, &tol).map_err(to_py)?.points)
    }

    fn __repr__(&self) -> String {
        format!("RationalMap(degree={}, json={})", self.inner.degree(), self.inner.to_json())
    }
}

/// A potential given by a spec such as "geometric:t=0.5" or "const:c=0.1".
#[pyclass(frozen, module = "pyparabolic")]
struct Potential {
    inner: CorePotential,
}

#[pymethods]
impl Potential {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: spec.parse().map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn geometric(t: f64) -> Self {
        Self {
            inner: CorePotential::geometric(t),
        }
    }

    #[staticmethod]
    fn constant(c: f64) -> Self {
        Self {
            inner: CorePotential::constant(c),
        }
    }

    fn shifted(&self, c: f64) -> Self {
        Self {
            inner: self.inner.shifted(c),
        }
    }

    fn __call__(&self, map: &RationalMap, z: Complex64) -> PyResult<f64> {
        self.inner.eval(&map.inner, z).map_err(to_py)
    }

    fn birkhoff_sum(&self, map: &RationalMap, z: Complex64, n: usize) -> PyResult<f64> {
        Ok(birkhoff(&map.inner, &self.inner, z, n).map_err(to_py)?.value)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?})", self.inner.to_string())
    }
}

#[pyclass(frozen, get_all, module = "pyparabolic")]
struct PressureEstimate {
    value: f64,
    method: String,
    n: usize,
    tail_width: f64,
    /// (1/k) log Λ_k for each depth k.
    diagnostics: Vec<f64>,
}

impl From<CoreEstimate> for PressureEstimate {
    fn from(e: CoreEstimate) -> Self {
        Self {
            value: e.value,
            method: e.method.to_string(),
            n: e.n,
            tail_width: e.tail_width,
            diagnostics: e.diagnostics,
        }
    }
}

#[pymethods]
impl PressureEstimate {
    fn __repr__(&self) -> String {
        format!(
            "PressureEstimate(value={}, method={:?}, n={}, tail_width={})",
            self.value, self.method, self.n, self.tail_width
        )
    }
}

/// P(φ) by the tree, periodic or Ulam oracle.
#[pyfunction]
#[pyo3(signature = (map, potential, method = "tree", n = None, anchor = None, extrapolation = "log-corrected", seed = 7))]
fn pressure(
    map: &RationalMap,
    potential: &Potential,
    method: &str,
    n: Option<usize>,
    anchor: Option<Complex64>,
    extrapolation: &str,
    seed: u64,
) -> PyResult<PressureEstimate> {
    let tol = Tolerances::default();
    let ex = self::extrapolation(extrapolation)?;
    let om = omega_of(&map.inner, 4)?;
    let config = OracleConfig {
        anchor,
        ..OracleConfig::default()
    };
    let estimate = match method {
        "tree" => {
            let w = config.anchor_for(&map.inner, &om, &tol).map_err(to_py)?;
            pressure_tree(&map.inner, &potential.inner, w, n.unwrap_or(config.tree_depth), ex, &tol)
        }
        "periodic" => pressure_periodic(&map.inner, &potential.inner, n.unwrap_or(config.periodic_depth), ex, &tol),
        "ulam" => {
            let w = match anchor {
                Some(w) => w,
                None => generic_anchor(&map.inner, &om, &tol).map_err(to_py)?,
            };
            let ulam = UlamConfig {
                seed,
                ..UlamConfig::default()
            };
            pressure_ulam(&map.inner, &potential.inner, w, &ulam, &tol)
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method {other:?}; expected tree, periodic or ulam"
            )))
        }
    };
    Ok(estimate.map_err(to_py)?.into())
}

/// A(Ω, φ): the largest Birkhoff average of φ over the parabolic cycles.
#[pyfunction]
#[pyo3(signature = (map, potential, scope = 4))]
fn a_omega(map: &RationalMap, potential: &Potential, scope: usize) -> PyResult<f64> {
    let om = omega_of(&map.inner, scope)?;
    a_omega_of(&map.inner, &om, &potential.inner).map_err(to_py)
}

/// (A, P, gap) with the default tree oracle.
#[pyfunction]
fn gap_check(map: &RationalMap, potential: &Potential) -> PyResult<(f64, f64, bool)> {
    let tol = Tolerances::default();
    let om = omega_of(&map.inner, 4)?;
    let config = OracleConfig::default();
    let a = a_omega_of(&map.inner, &om, &potential.inner).map_err(to_py)?;
    let w = config.anchor_for(&map.inner, &om, &tol).map_err(to_py)?;
    let est = pressure_tree(&map.inner, &potential.inner, w, config.tree_depth, config.extrapolation, &tol)
        .map_err(to_py)?;
    let r = GapReport::from_estimate(a, est, config.zero_tol);
    Ok((r.a, r.p, r.gap))
}

/// First t at which P(-t log|f'|) reaches zero.
#[pyfunction]
fn bowen_root(map: &RationalMap) -> PyResult<f64> {
    let tol = Tolerances::default();
    let om = omega_of(&map.inner, 4)?;
    Ok(core_bowen_root(&map.inner, &om, &OracleConfig::default(), &tol).map_err(to_py)?.h)
}

/// (g, s) for a 0/1 λ-pattern.
#[pyfunction]
fn decompose(lambda_pattern: Vec<u8>, eta: f64) -> PyResult<(usize, usize)> {
    if lambda_pattern.iter().any(|&b| b > 1) {
        return Err(PyValueError::new_err("the pattern must contain only 0 and 1"));
    }
    Ok(decompose_pattern(&lambda_pattern, eta))
}

#[pyfunction]
fn box_counting_dimension(points: Vec<Complex64>, scales: Vec<f64>) -> PyResult<f64> {
    Ok(box_fit(&points, &scales).map_err(to_py)?.dimension)
}

/// (alpha, M, r_min_on_K, global_min, pass) of the two-pass calibration.
#[pyfunction]
fn calibrate(map: &RationalMap) -> PyResult<(f64, f64, f64, f64, bool)> {
    let tol = Tolerances::default();
    let om = omega_of(&map.inner, 4)?;
    let sample = map.julia_sample(1e-3, 0)?;
    let cal = calibrate_metric(&map.inner, &om, &sample, &ALPHA_LADDER, DEFAULT_TRUNCATION, &tol).map_err(to_py)?;
    Ok((
        cal.metric.alpha,
        cal.metric.m,
        cal.report.r_min_on_k,
        cal.report.global_min,
        cal.pass,
    ))
}

#[pymodule]
fn pyparabolic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<RationalMap>()?;
    m.add_class::<Potential>()?;
    m.add_class::<PressureEstimate>()?;
    m.add_function(wrap_pyfunction!(pressure, m)?)?;
    m.add_function(wrap_pyfunction!(a_omega, m)?)?;
    m.add_function(wrap_pyfunction!(gap_check, m)?)?;
    m.add_function(wrap_pyfunction!(bowen_root, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(box_counting_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    Ok(())
}
