//! Transparent-boundary solver for the time-dependent linear Schrödinger
//! equation on unbounded domains.
//!
//! The interior of the computational domain is discretized with P1 finite
//! elements and an A-stable implicit Runge-Kutta method; the unbounded
//! exterior is accounted for by convolution-quadrature boundary integral
//! operators with matrix-valued complex wave numbers (symmetric FEM-BEM
//! coupling in 3D, the scalar half-line symbol in 1D). Exterior fields are
//! recovered from boundary data by post-processing the representation
//! formula.
//!
//! Crate layout:
//! - [`linalg`]: dense complex matrices, LU, small eigensolver, contour FFT
//! - [`tableau`]: Butcher tableaus and stability quantities
//! - [`cq`]: the operational calculus (weights, matrix functions, history sums)
//! - [`bem`]: surface meshes and Galerkin boundary operators
//! - [`fem`]: interval/tetrahedral P1 interior forms
//! - [`solver`]: the coupled time steppers and monitors
//! - [`exact`]: closed-form Gaussian beam references
//! - [`harness`]: run configuration, convergence studies, CSV reporting
//!
//! Data-parallel loops use rayon when the `parallel` feature (default) is
//! enabled and fall back to sequential execution otherwise.

pub mod bem;
pub mod cq;
pub mod error;
pub mod exact;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod par;
pub mod solver;
pub mod tableau;

pub use error::{Error, Result};
