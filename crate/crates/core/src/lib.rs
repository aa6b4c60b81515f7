//! Keen–Goodwin macro-dynamics with private debt.
//!
//! Equilibria and spectra of the three-dimensional model, the conservative
//! structure of the zero-interest case, Hopf continuation in the investment
//! slope, limit-cycle shooting with Floquet analysis, and a first-order
//! phase–amplitude reduction for small interest rates.

pub mod conserved;
pub mod continuation;
pub mod error;
pub mod integrate;
pub mod io;
pub mod linalg;
pub mod model;
pub mod orbits;
pub mod periodic;
pub mod quad;
pub mod reduction;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{Calibration, EquilibriumKind, EquilibriumReport, ModelParams, State};
