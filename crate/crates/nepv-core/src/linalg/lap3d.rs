//! 3-d discrete Laplacian (Kronecker sum of 1-d stencils) with a
//! matrix-free apply and a preconditioned conjugate gradient solve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::SymOperator;
use crate::mat::Mat;

/// Discrete Laplacian on an `m x m x m` interior grid with Dirichlet
/// boundaries. Grid point `(i, j, l)` maps to index `i + m*j + m*m*l`; the
/// seven-point stencil is `6` on the diagonal and `-1` for each neighbor
/// along a coordinate axis, i.e. the Kronecker sum of three 1-d
/// `tridiag(-1, 2, -1)` operators.
#[derive(Clone, Debug)]
pub struct Laplacian3d {
    m: usize,
    cg_tol: f64,
    cg_max_iter: usize,
}

impl Laplacian3d {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "laplacian_3d needs at least one grid point per axis");
        Laplacian3d {
            m,
            cg_tol: 1e-12,
            cg_max_iter: 100 * m + 1000,
        }
    }

    pub fn grid_side(&self) -> usize {
        self.m
    }
}

impl SymOperator for Laplacian3d {
    fn dim(&self) -> usize {
        self.m * self.m * self.m
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let mm = m * m;
        for l in 0..m {
            for j in 0..m {
                let base = j * m + l * mm;
                for i in 0..m {
                    let idx = base + i;
                    let mut acc = 6.0 * x[idx];
                    if i > 0 {
                        acc -= x[idx - 1];
                    }
                    if i + 1 < m {
                        acc -= x[idx + 1];
                    }
                    if j > 0 {
                        acc -= x[idx - m];
                    }
                    if j + 1 < m {
                        acc -= x[idx + m];
                    }
                    if l > 0 {
                        acc -= x[idx - mm];
                    }
                    if l + 1 < m {
                        acc -= x[idx + mm];
                    }
                    y[idx] = acc;
                }
            }
        }
    }

    /// Jacobi-preconditioned conjugate gradients to a relative residual of
    /// 1e-12. The operator is positive definite, so CG is the natural solve;
    /// the dense factorization route would cost O(m^6) memory.
    fn solve(&self, b: &[f64]) -> crate::Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(crate::Error::Dimension(format!(
                "rhs length {} does not match operator dimension {n}",
                b.len()
            )));
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let tol = self.cg_tol * bnorm;
        let inv_diag = 1.0 / 6.0;

        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().map(|ri| ri * inv_diag).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];

        for _ in 0..self.cg_max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(crate::Error::Numerical(
                    "conjugate gradients lost positive definiteness".into(),
                ));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm2(&r) <= tol {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag;
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(crate::Error::NoConvergence(format!(
            "conjugate gradients did not reach {tol:e} within {} iterations",
            self.cg_max_iter
        )))
    }

    fn to_dense(&self) -> Mat<f64> {
        let m = self.m;
        let n = self.dim();
        let mm = m * m;
        let mut a = Mat::zeros(n, n);
        for l in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let idx = i + j * m + l * mm;
                    a[(idx, idx)] = 6.0;
                    if i > 0 {
                        a[(idx, idx - 1)] = -1.0;
                    }
                    if i + 1 < m {
                        a[(idx, idx + 1)] = -1.0;
                    }
                    if j > 0 {
                        a[(idx, idx - m)] = -1.0;
                    }
                    if j + 1 < m {
                        a[(idx, idx + m)] = -1.0;
                    }
                    if l > 0 {
                        a[(idx, idx - mm)] = -1.0;
                    }
                    if l + 1 < m {
                        a[(idx, idx + mm)] = -1.0;
                    }
                }
            }
        }
        a
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig::sym_eig_full;

    #[test]
    fn apply_matches_dense_multiply() {
        for m in [2usize, 3] {
            let op = Laplacian3d::new(m);
            let n = op.dim();
            let dense = op.to_dense();
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 13) as f64 - 6.0).collect();
            let mut y = vec![0.0; n];
            op.apply(&x, &mut y);
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += dense[(i, j)] * x[j];
                }
                assert!((acc - y[i]).abs() < 1e-13, "row {i} of m={m}");
            }
        }
    }

    #[test]
    fn spectrum_is_sum_of_one_dimensional_eigenvalues() {
        // Oracle: eigenvalues of the Kronecker sum are all triple sums
        // (2 - 2cos(a pi/(m+1))) + (same in b) + (same in c).
        let m = 3;
        let op = Laplacian3d::new(m);
        let (vals, _) = sym_eig_full(&op.to_dense()).unwrap();
        let lam1: Vec<f64> = (1..=m)
            .map(|j| 2.0 - 2.0 * (j as f64 * core::f64::consts::PI / (m as f64 + 1.0)).cos())
            .collect();
        let mut sums = Vec::new();
        for a in &lam1 {
            for b in &lam1 {
                for c in &lam1 {
                    sums.push(a + b + c);
                }
            }
        }
        sums.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(vals.len(), sums.len());
        for (got, expect) in vals.iter().zip(&sums) {
            assert!((got - expect).abs() < 1e-11, "got {got}, expected {expect}");
        }
    }

    #[test]
    fn cg_solve_reaches_tight_residual() {
        let m = 10;
        let op = Laplacian3d::new(m);
        let n = op.dim();
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin()).collect();
        let x = op.solve(&b).unwrap();
        let mut ax = vec![0.0; n];
        op.apply(&x, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(a, bb)| (a - bb) * (a - bb))
            .sum::<f64>()
            .sqrt();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * bnorm, "relative residual {}", res / bnorm);
    }

    #[test]
    fn zero_rhs_solves_to_zero() {
        let op = Laplacian3d::new(4);
        let x = op.solve(&vec![0.0; op.dim()]).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
