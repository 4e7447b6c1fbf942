//! Numerical laboratory for residues of Laplace-type operators.
//!
//! The crate computes Hadamard coefficients from metric data, evaluates
//! closed-form residue formulas, and extracts the same residues
//! independently from the scaling dynamics of sampled kernels.

pub mod error;
pub mod expr;
pub mod hadamard;
pub mod jet;
pub mod metricspace;
pub mod modeldist;
pub mod normalgeo;
pub mod ode;
pub mod quadrature;
pub mod residuecalc;
pub mod scaledyn;
pub mod special;

pub use error::{Error, Result};
