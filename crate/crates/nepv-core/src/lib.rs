//! Solvers for eigenvector-dependent nonlinear eigenvalue problems.
//!
//! The problems treated here ask for an orthonormal `V` (n x k) and a symmetric
//! `Lambda` (k x k) with `H(V) V = V Lambda`, or in the generalized form
//! `H(V) V = G(V) V Lambda`, where the Hermitian matrix `H` (and possibly `G`)
//! depends on `V` itself. The crate provides
//!
//! * [`mat`]: a small column-major dense matrix type with the Frobenius inner
//!   product and vectorization helpers,
//! * [`linalg`]: dense symmetric/Hermitian eigendecomposition, tridiagonal and
//!   3-d Laplacian operators, Cholesky factorization,
//! * [`model`]: the residual `F(X)` and its Frechet derivative for a problem
//!   expressed through the [`model::NepvModel`] trait,
//! * [`scf`]: self-consistent field iteration (repeated linearized
//!   eigenproblems) used standalone and as pre/postprocessing,
//! * [`glgmres`] / [`vecgmres`]: global GMRES on the matrix update equation and
//!   an independent vector GMRES used on its vectorized form,
//! * [`newton`]: the inexact matrix Newton driver with adaptive forcing terms
//!   and backtracking damping,
//! * [`problems`]: Kohn-Sham style model problems (1-d and 3-d), a robust
//!   linear discriminant analysis model with its evaluation pipeline, and a
//!   rotating Gross-Pitaevskii discretization in complex and real-doubled form.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! only adds wall-clock timing in solver traces and `std::error::Error`
//! integration via `core::error::Error`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod glgmres;
pub mod linalg;
pub mod mat;
pub mod model;
pub mod newton;
pub mod problems;
pub mod scf;
pub mod vecgmres;

pub use error::Error;
pub use mat::{Mat, Scalar};

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

#[cfg(feature = "std")]
pub(crate) fn wall_clock_ms<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

#[cfg(not(feature = "std"))]
pub(crate) fn wall_clock_ms<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}
