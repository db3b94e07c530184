//! Canonical maps used by the examples, tests and CLI.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rational_map::RationalMap;

#[derive(Clone, Copy, Debug)]
pub struct Example {
    pub name: &'static str,
    pub formula: &'static str,
    pub note: &'static str,
}

pub const EXAMPLES: [Example; 4] = [
    Example {
        name: "square",
        formula: "z^2",
        note: "hyperbolic; J is the unit circle and there is no parabolic cycle",
    },
    Example {
        name: "quad_parabolic",
        formula: "z^2 + 1/4",
        note: "parabolic fixed point 1/2 with multiplier 1 (the cauliflower)",
    },
    Example {
        name: "blaschke_parabolic",
        formula: "(3z^2 + 1)/(z^2 + 3)",
        note: "parabolic fixed point 1 of multiplicity 3; J is the unit circle",
    },
    Example {
        name: "cheb",
        formula: "z^2 - 2",
        note: "Chebyshev map; J = [-2, 2] contains the critical point 0",
    },
];

fn real(coeffs: &[f64]) -> Vec<Complex64> {
    coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()
}

pub fn example(name: &str) -> Result<RationalMap> {
    match name {
        "square" => RationalMap::polynomial(&[0.0, 0.0, 1.0]),
        "quad_parabolic" => RationalMap::polynomial(&[0.25, 0.0, 1.0]),
        "blaschke_parabolic" => RationalMap::new(real(&[1.0, 0.0, 3.0]), real(&[3.0, 0.0, 1.0])),
        "cheb" => RationalMap::polynomial(&[-2.0, 0.0, 1.0]),
        _ => Err(Error::InvalidArgument(format!(
            "unknown example {name:?}; known: {}",
            EXAMPLES.map(|e| e.name).join(", ")
        ))),
    }
}
