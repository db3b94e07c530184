//! Global numerical tolerances and budgets shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum allowed |f(z) - w| for a computed preimage z of w.
    pub fiber: f64,
    /// Relative residual targeted by Newton polishing of simple roots.
    pub polish: f64,
    /// Upper bound on d^n for a preimage tree.
    pub node_budget: usize,
    /// Largest polynomial degree handed to the periodic-point solver.
    pub root_degree_budget: usize,
    /// Largest degree of an iterate f^k built by composition.
    pub compose_degree_budget: usize,
    /// Tolerance for |multiplier| = 1 and for arg/2pi = p/q.
    pub root_of_unity: f64,
    /// Largest denominator tried when matching a rational rotation number.
    pub q_max: u32,
    /// Distance below which a point of period n is matched to a proper divisor period.
    pub divisor_match: f64,
    /// Minimum radius used to cluster coincident roots.
    pub root_cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fiber: 1e-9,
            polish: 1e-12,
            node_budget: 1 << 20,
            root_degree_budget: 1025,
            compose_degree_budget: 4096,
            root_of_unity: 1e-8,
            q_max: 12,
            divisor_match: 1e-8,
            root_cluster: 1e-6,
        }
    }
}
