//! Symmetric tridiagonal operators and the 1-d discrete Laplacian.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::SymOperator;
use crate::mat::Mat;

/// Symmetric tridiagonal matrix stored as its diagonal and subdiagonal.
#[derive(Clone, Debug)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> crate::Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(crate::Error::Dimension(format!(
                "tridiagonal needs m >= 1 and m-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        Ok(SymTridiag { diag, off })
    }

    /// 1-d discrete Laplacian on `m` interior grid points (Dirichlet
    /// boundaries): `tridiag(-1, 2, -1)`.
    pub fn laplacian_1d(m: usize) -> Self {
        assert!(m >= 1, "laplacian_1d needs at least one grid point");
        SymTridiag {
            diag: vec![2.0; m],
            off: vec![-1.0; m.saturating_sub(1)],
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }
}

impl SymOperator for SymTridiag {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.dim();
        assert_eq!(x.len(), m);
        assert_eq!(y.len(), m);
        for i in 0..m {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Thomas algorithm (LDL^T for the symmetric case), O(m). No pivoting;
    /// intended for the positive definite operators used by the models.
    fn solve(&self, b: &[f64]) -> crate::Result<Vec<f64>> {
        let m = self.dim();
        if b.len() != m {
            return Err(crate::Error::Dimension(format!(
                "rhs length {} does not match operator dimension {m}",
                b.len()
            )));
        }
        // Forward sweep: d holds the pivots, w the scratch rhs.
        let mut d = vec![0.0; m];
        let mut w = b.to_vec();
        d[0] = self.diag[0];
        if d[0] == 0.0 {
            return Err(crate::Error::Singular("zero pivot in tridiagonal solve".into()));
        }
        for i in 1..m {
            let l = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - l * self.off[i - 1];
            if d[i] == 0.0 {
                return Err(crate::Error::Singular("zero pivot in tridiagonal solve".into()));
            }
            w[i] -= l * w[i - 1];
        }
        // Back substitution.
        let mut x = vec![0.0; m];
        x[m - 1] = w[m - 1] / d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = (w[i] - self.off[i] * x[i + 1]) / d[i];
        }
        Ok(x)
    }

    fn to_dense(&self) -> Mat<f64> {
        let m = self.dim();
        let mut a = Mat::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = self.diag[i];
            if i + 1 < m {
                a[(i + 1, i)] = self.off[i];
                a[(i, i + 1)] = self.off[i];
            }
        }
        a
    }
}
