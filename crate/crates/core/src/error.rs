use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("derivative has a pole at {0}")]
    PoleOfDerivative(Complex64),

    #[error("root solver did not converge for a degree-{degree} polynomial after {iterations} iterations (coefficients: {coefficients})")]
    RootSolver {
        degree: usize,
        iterations: usize,
        coefficients: String,
    },

    #[error("degenerate fiber over {0}: the fiber equation drops degree")]
    DegenerateFiber(Complex64),

    #[error("fiber check failed: |f(z) - w| = {residual:e} exceeds {tolerance:e}")]
    FiberResidual { residual: f64, tolerance: f64 },

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: usize,
        budget: usize,
    },

    #[error("map is not parabolic within the searched scope (periods <= {scope})")]
    NotParabolic { scope: usize },

    #[error("potential evaluation near a critical point at {0} (|f'| below 1e-300)")]
    NearCritical(Complex64),

    #[error("evaluation failed at orbit index {index}: {source}")]
    OrbitEvaluation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular density at {0}: point coincides with the postcritical truncation")]
    SingularDensity(Complex64),

    #[error("points too far apart for the local distance: {distance} > {limit}")]
    NotLocal { distance: f64, limit: f64 },

    #[error("sample too sparse: mesh {mesh} exceeds {limit}")]
    SampleTooSparse { mesh: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("no bracket found: {0}")]
    NoBracket(String),

    #[error("power iteration did not converge: oscillation amplitude {amplitude:e}")]
    PowerIteration { amplitude: f64 },

    #[error("gluing failed at link {link}: nearest miss {nearest_miss} (epsilon {epsilon})")]
    GluingFailed {
        link: usize,
        nearest_miss: f64,
        epsilon: f64,
    },

    #[error("transition time search reached the cap N = {cap}")]
    TransitionCap { cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
