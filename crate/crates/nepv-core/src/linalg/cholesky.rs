//! Dense Cholesky factorization of symmetric positive definite matrices.
//!
//! Used for the congruence reduction of generalized problems `H x = lambda G x`
//! with positive definite `G`, and as the direct-solve oracle in tests.

use alloc::format;
use alloc::vec::Vec;

use crate::mat::Mat;

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Mat<f64>,
}

impl Cholesky {
    pub fn new(a: &Mat<f64>) -> crate::Result<Self> {
        if !a.is_square() {
            return Err(crate::Error::Dimension(format!(
                "Cholesky needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for p in 0..j {
                diag -= l[(j, p)] * l[(j, p)];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(crate::Error::Singular(format!(
                    "matrix is not positive definite (pivot {diag:e} at column {j})"
                )));
            }
            #[allow(unused_imports)]
            use num_traits::Float;
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut acc = a[(i, j)];
                for p in 0..j {
                    acc -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = acc / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Mat<f64> {
        &self.l
    }

    /// `L^{-1} B` by forward substitution on each column.
    pub fn forward_solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        let n = self.l.rows();
        assert_eq!(b.rows(), n, "forward solve shape mismatch");
        let mut x = b.clone();
        for j in 0..x.cols() {
            let col = x.col_mut(j);
            for i in 0..n {
                let mut acc = col[i];
                for p in 0..i {
                    acc -= self.l[(i, p)] * col[p];
                }
                col[i] = acc / self.l[(i, i)];
            }
        }
        x
    }

    /// `L^{-T} B` by back substitution on each column.
    pub fn back_solve_t_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        let n = self.l.rows();
        assert_eq!(b.rows(), n, "back solve shape mismatch");
        let mut x = b.clone();
        for j in 0..x.cols() {
            let col = x.col_mut(j);
            for i in (0..n).rev() {
                let mut acc = col[i];
                for p in i + 1..n {
                    acc -= self.l[(p, i)] * col[p];
                }
                col[i] = acc / self.l[(i, i)];
            }
        }
        x
    }

    /// `A^{-1} B = L^{-T} L^{-1} B`.
    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        self.back_solve_t_mat(&self.forward_solve_mat(b))
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let m = Mat::from_col_major(b.len(), 1, b.to_vec()).expect("column shape");
        let x = self.solve_mat(&m);
        x.as_slice().to_vec()
    }

    /// Congruence transform `L^{-1} H L^{-T}`, symmetrized against roundoff.
    /// Maps the pencil `(H, A)` to a standard symmetric eigenproblem.
    pub fn congruence(&self, h: &Mat<f64>) -> Mat<f64> {
        let y = self.forward_solve_mat(h); // L^{-1} H
        let z = self.forward_solve_mat(&y.transpose()); // L^{-1} H^T L^{-T} transposed
        let mut out = z.transpose();
        let n = out.rows();
        for j in 0..n {
            for i in 0..j {
                let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        out
    }
}
