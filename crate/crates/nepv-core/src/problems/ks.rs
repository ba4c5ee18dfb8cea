//! Density-functional model Hamiltonians on regular grids.
//!
//! Both models share the charge density `rho(V) = diag(V V^T)` (the squared
//! row norms of `V`) and differ in the grid and the exchange term:
//!
//! * [`KsSimpleModel`]: `H(V) = L + gamma Diag(L^{-1} rho(V))` on a 1-d grid,
//! * [`Ks3dModel`]: `H(V) = L + Diag(L^{-1} rho(V) - gamma rho(V)^{1/3})` on
//!   an `m x m x m` grid, with the elementwise cube root.
//!
//! The derivative of `rho` in direction `E` is `2 diag(V E^T)`, computed
//! rowwise in `O(nk)` without forming `V E^T`; the Hartree term needs one
//! extra Poisson solve per derivative application and the exchange term is a
//! pointwise product. Both derivative actions are diagonal, so applying them
//! to an Arnoldi direction costs `O(nk)` beyond the solve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::{Laplacian3d, SpectrumEnd, SymOperator, SymTridiag};
use crate::mat::Mat;
use crate::model::NepvModel;

/// Squared row norms of `V`: the charge density `rho(V) = diag(V V^T)`.
fn density(v: &Mat<f64>) -> Vec<f64> {
    let mut rho = vec![0.0; v.rows()];
    for j in 0..v.cols() {
        for (i, r) in rho.iter_mut().enumerate() {
            *r += v[(i, j)] * v[(i, j)];
        }
    }
    rho
}

/// Rowwise `diag(V E^T)` without forming the `n x n` product.
fn row_inner(v: &Mat<f64>, e: &Mat<f64>) -> Vec<f64> {
    let mut d = vec![0.0; v.rows()];
    for j in 0..v.cols() {
        for (i, s) in d.iter_mut().enumerate() {
            *s += v[(i, j)] * e[(i, j)];
        }
    }
    d
}

/// Scales row `i` of `w` by `d[i]`: the action of `Diag(d)` on a block.
fn diag_apply(d: &[f64], w: &Mat<f64>) -> Mat<f64> {
    let mut out = w.clone();
    for j in 0..out.cols() {
        for (i, &s) in d.iter().enumerate() {
            out[(i, j)] *= s;
        }
    }
    out
}

/// 1-d density-functional model `H(V) = L + gamma Diag(L^{-1} rho(V))` with
/// the standard second-difference Laplacian `L = tridiag(-1, 2, -1)`.
///
/// The derivative action is `L_H(V, E) = 2 gamma Diag(L^{-1} diag(V E^T))`.
#[derive(Clone, Debug)]
pub struct KsSimpleModel {
    l: SymTridiag,
    dense_l: Mat<f64>,
    gamma: f64,
    k: usize,
}

impl KsSimpleModel {
    pub fn new(n: usize, k: usize, gamma: f64) -> crate::Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(crate::Error::Dimension(format!(
                "need 0 < k <= n, got n={n}, k={k}"
            )));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(crate::Error::InvalidInput(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        let l = SymTridiag::laplacian_1d(n);
        let dense_l = l.to_dense();
        Ok(KsSimpleModel {
            l,
            dense_l,
            gamma,
            k,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The canonical starting block: the first `k` columns of the identity.
    pub fn identity_start(&self) -> Mat<f64> {
        Mat::from_fn(self.n(), self.k, |i, j| if i == j { 1.0 } else { 0.0 })
    }
}

impl NepvModel for KsSimpleModel {
    type Field = f64;

    fn n(&self) -> usize {
        self.dense_l.rows()
    }

    fn k(&self) -> usize {
        self.k
    }

    fn spectrum_end(&self) -> SpectrumEnd {
        SpectrumEnd::Smallest
    }

    fn eval_h(&self, v: &Mat<f64>) -> crate::Result<Mat<f64>> {
        let pot = self.l.solve(&density(v))?;
        let mut h = self.dense_l.clone();
        for (i, &p) in pot.iter().enumerate() {
            h[(i, i)] += self.gamma * p;
        }
        Ok(h)
    }

    fn apply_lh_to(&self, v: &Mat<f64>, ev: &Mat<f64>, w: &Mat<f64>) -> crate::Result<Mat<f64>> {
        let mut pot = self.l.solve(&row_inner(v, ev))?;
        for p in pot.iter_mut() {
            *p *= 2.0 * self.gamma;
        }
        Ok(diag_apply(&pot, w))
    }
}

/// Rows of `V` whose density falls below this are treated as zero rows and
/// perturbed before evaluating `rho^{-2/3}` in the derivative.
const ZERO_ROW_DENSITY: f64 = 1e-300;
/// Size of the perturbation added to each entry of a zero row.
const ZERO_ROW_NUDGE: f64 = 1e-12;

/// 3-d density-functional model
/// `H(V) = L + Diag(L^{-1} rho(V) - gamma rho(V)^{1/3})` on an `m^3` grid.
///
/// The derivative action is
/// `L_H(V, E) = 2 Diag(L^{-1} d - (gamma/3) rho(V)^{-2/3} .* d)` with
/// `d = diag(V E^T)`. The `rho^{-2/3}` factor is undefined on zero rows of
/// `V`; trial steps inside a Newton iteration can produce such rows, so the
/// derivative perturbs affected rows by [`ZERO_ROW_NUDGE`] instead of
/// failing (see [`Ks3dModel::apply_lh_to`]).
#[derive(Clone, Debug)]
pub struct Ks3dModel {
    l: Laplacian3d,
    dense_l: Mat<f64>,
    gamma: f64,
    k: usize,
}

impl Ks3dModel {
    /// Builds the model on an `m x m x m` interior grid (`n = m^3`).
    pub fn new(m: usize, k: usize, gamma: f64) -> crate::Result<Self> {
        if m == 0 || k == 0 || k > m * m * m {
            return Err(crate::Error::Dimension(format!(
                "need 0 < k <= m^3, got m={m}, k={k}"
            )));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(crate::Error::InvalidInput(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        let l = Laplacian3d::new(m);
        let dense_l = l.to_dense();
        Ok(Ks3dModel {
            l,
            dense_l,
            gamma,
            k,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid_side(&self) -> usize {
        self.l.grid_side()
    }

    /// The canonical starting block: the first `k` columns of the identity.
    pub fn identity_start(&self) -> Mat<f64> {
        Mat::from_fn(self.n(), self.k, |i, j| if i == j { 1.0 } else { 0.0 })
    }
}

impl NepvModel for Ks3dModel {
    type Field = f64;

    fn n(&self) -> usize {
        self.dense_l.rows()
    }

    fn k(&self) -> usize {
        self.k
    }

    fn spectrum_end(&self) -> SpectrumEnd {
        SpectrumEnd::Smallest
    }

    fn eval_h(&self, v: &Mat<f64>) -> crate::Result<Mat<f64>> {
        let rho = density(v);
        let pot = self.l.solve(&rho)?;
        let mut h = self.dense_l.clone();
        for i in 0..h.rows() {
            h[(i, i)] += pot[i] - self.gamma * Float::cbrt(rho[i]);
        }
        Ok(h)
    }

    fn apply_lh_to(&self, v: &Mat<f64>, ev: &Mat<f64>, w: &Mat<f64>) -> crate::Result<Mat<f64>> {
        let mut rho = density(v);
        let mut d = row_inner(v, ev);
        if self.gamma > 0.0 && rho.iter().any(|&r| r < ZERO_ROW_DENSITY) {
            // rho^{-2/3} is undefined on a zero row; nudge the row off zero
            // so the derivative stays finite and recompute its density and
            // rowwise inner product.
            let mut vp = v.clone();
            for i in 0..vp.rows() {
                if rho[i] < ZERO_ROW_DENSITY {
                    let mut r = 0.0;
                    let mut s = 0.0;
                    for j in 0..vp.cols() {
                        vp[(i, j)] += ZERO_ROW_NUDGE;
                        r += vp[(i, j)] * vp[(i, j)];
                        s += vp[(i, j)] * ev[(i, j)];
                    }
                    rho[i] = r;
                    d[i] = s;
                }
            }
        }
        let pot = self.l.solve(&d)?;
        let mut diag = vec![0.0; rho.len()];
        for i in 0..diag.len() {
            let exch = if self.gamma > 0.0 {
                let cbrt = Float::cbrt(rho[i]);
                self.gamma / 3.0 * d[i] / (cbrt * cbrt)
            } else {
                0.0
            };
            diag[i] = 2.0 * (pot[i] - exch);
        }
        Ok(diag_apply(&diag, w))
    }
}
