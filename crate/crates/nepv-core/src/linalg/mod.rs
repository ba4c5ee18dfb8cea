//! Dense and structured linear algebra kernels.
//!
//! Everything is hand-rolled on top of [`crate::mat::Mat`]: the discrete
//! Laplacians used by the model problems, a dense Cholesky factorization, and
//! a dense symmetric/Hermitian eigensolver (Householder tridiagonalization
//! followed by implicit-shift QL).

pub mod cholesky;
pub mod lap3d;
pub mod sym_eig;
pub mod tridiag;

pub use cholesky::Cholesky;
pub use lap3d::Laplacian3d;
pub use sym_eig::{sym_eig_full, sym_eigs_k, EigPairs, SpectrumEnd};
pub use tridiag::SymTridiag;

use crate::mat::Mat;
use alloc::vec::Vec;

/// Real symmetric linear operator given by its action, with a direct or
/// iterative solve and a dense realization for eigendecomposition.
pub trait SymOperator {
    fn dim(&self) -> usize;
    /// `y = A x`; `x` and `y` must both have length [`SymOperator::dim`].
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Solves `A x = b`.
    fn solve(&self, b: &[f64]) -> crate::Result<Vec<f64>>;
    fn to_dense(&self) -> Mat<f64>;

    /// Convenience wrapper allocating the output of [`SymOperator::apply`].
    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}
