//! Pseudo-spectral simulation of the 1D fractional porous medium flow
//! `∂tρ + ∂x(ρu) = 0`, `u = HΛ^{α-1}ρ`, on the torus `[-1/2, 1/2)`, together
//! with numerical checks of its a-priori estimates.

pub mod characteristics;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod extensions;
pub mod grid;
pub mod initial;
pub mod nonlocal;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{DensityField, Interpolant, PeriodicGrid};
pub use nonlocal::OperatorParams;
