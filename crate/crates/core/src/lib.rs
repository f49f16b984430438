//! Symbolic and numerical machinery for unique-continuation experiments on
//! Schrödinger flows `i∂t u + ∇·(A∇u) + Vu = 0` with variable coefficients.

pub mod error;
pub mod expr;

pub use error::{Error, Result};
pub mod coeff;
pub mod gauge;
pub mod quad;
pub mod ops;
pub mod jet;
pub mod grid;
pub mod evolution;
pub mod carleman;
pub mod diagnostics;
pub mod analysis;
