//! Numerical laboratory for randomly perturbed quantizations of torus
//! symbols.
//!
//! A [`symbols::Symbol`] is a trigonometric polynomial on `T^{2d}`;
//! [`quantize`] turns it into an `N^d x N^d` matrix, [`random`] samples the
//! perturbation ensembles, [`linalg`] supplies the dense complex solvers,
//! [`grushin`] builds and checks the bordered (Grushin) problem, and
//! [`experiments`] runs seeded Monte Carlo checks of the spectral
//! asymptotics (Weyl law, smallest singular value tails, log-determinants,
//! resolvent growth).

// `!(x > 0.0)` is the NaN-rejecting form of the parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod grushin;
pub mod linalg;
pub mod matrix;
pub mod quantize;
pub mod random;
pub mod stats;
pub mod symbols;

pub use error::{Result, WeylError};
pub use matrix::CMatrix;
pub use num_complex::Complex64;
pub use quantize::{ConstructionPath, QuantizedOperator};
pub use random::{Ensemble, PerturbationSpec};
pub use symbols::Symbol;
