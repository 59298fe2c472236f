//! Stochastic Galerkin discretization of convection-diffusion problems with
//! random coefficients.
//!
//! Space is discretized with symmetric interior penalty DG on triangles,
//! the random input with a truncated Karhunen-Loeve expansion and a Legendre
//! chaos basis. The coupled system `sum_k G_k (x) K_k` is solved in low-rank
//! form `U = W V^T` by preconditioned Krylov methods.

pub mod chaos;
pub mod dg_assembly;
pub mod driver;
pub mod error;
pub mod exec;
pub mod krylov;
pub mod lowrank;
pub mod mesh;
pub mod precond;
pub mod quadrature;
pub mod random_field;
pub mod sparse;

pub use error::{Error, Result};
