//! Thermodynamic formalism for parabolic rational maps at desk scale.
//!
//! The crate locates parabolic cycles, evaluates the pressure obstruction
//! A(Ω, φ), estimates topological pressure with several independent oracles,
//! builds a Milnor-type metric and the good/bad orbit decomposition, witnesses
//! specification and the Bowen property, and solves the Bowen equation.

pub mod config;
pub mod decomposition;
pub mod error;
pub mod julia;
pub mod metric;
pub mod periodic;
pub mod poly;
pub mod potential;
pub mod pressure;
pub mod rational_map;
pub mod registry;
pub mod report;
pub mod spec_verify;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use rational_map::{is_infinite, PreimageTree, RationalMap, INFINITY};
