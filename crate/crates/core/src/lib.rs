//! Numerical laboratory for the radial energy-critical focusing wave equation
//! `∂²_t u − Δu − |u|^{4/(D−2)} u = 0` in dimensions `4 ≤ D ≤ 8`.

pub mod cutoff;
pub mod diagnostics;
pub mod error;
pub mod evolver;
pub mod ground_state;
pub mod quadrature;
pub mod modulation;
pub mod multibubble;
pub mod ode;
pub mod optimize;
pub mod radial;
pub mod reduced;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
