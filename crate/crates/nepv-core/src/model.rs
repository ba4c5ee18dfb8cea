//! Problem abstraction for nonlinear eigenvector problems.
//!
//! A problem is expressed through [`NepvModel`]: the Hermitian matrix `H(V)`
//! (and optionally `G(V)` for generalized problems) together with the action
//! of the directional derivative `L_H(V, E_V)`. On top of that this module
//! provides the root function
//!
//! ```text
//! F(X) = [ H(V) V - G(V) V Lam ]      X = [ V ; Lam ],  G = I for plain NEPv
//!        [ V^H V - I_k         ]
//! ```
//!
//! its directional derivative `L_F(X, E)` with derivative recycling (the
//! caller evaluates `H(V)`/`G(V)` once per iterate and reuses them for every
//! direction), a finite-difference fallback, and an explicit Kronecker-form
//! realization of `L_F` used by the equivalence tests between matrix and
//! vector Krylov solvers.

use alloc::format;

use crate::linalg::SpectrumEnd;
use crate::mat::{frob_norm, vectorize, Mat, Scalar};
#[allow(unused_imports)]
use num_traits::Float;

/// How a model exposes `L_H` (and `L_G`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    /// The model implements the exact derivative action.
    Exact,
    /// No exact derivative; use one-sided finite differences on `H` (`G`).
    FiniteDifference,
    /// Derivatives unavailable; Newton-type solvers cannot run.
    Disabled,
}

/// Solver iterate `X = [V; Lam]`.
#[derive(Clone, Debug)]
pub struct Iterate<T: Scalar> {
    pub v: Mat<T>,
    pub lam: Mat<T>,
}

impl<T: Scalar> Iterate<T> {
    pub fn new(v: Mat<T>, lam: Mat<T>) -> crate::Result<Self> {
        if lam.rows() != v.cols() || lam.cols() != v.cols() {
            return Err(crate::Error::Dimension(format!(
                "multiplier block must be {}x{}, got {}x{}",
                v.cols(),
                v.cols(),
                lam.rows(),
                lam.cols()
            )));
        }
        Ok(Iterate { v, lam })
    }

    pub fn n(&self) -> usize {
        self.v.rows()
    }

    pub fn k(&self) -> usize {
        self.v.cols()
    }

    /// Stacked `(n+k) x k` view `[V; Lam]`.
    pub fn stacked(&self) -> Mat<T> {
        self.v.vstack(&self.lam)
    }

    pub fn from_stacked(x: &Mat<T>) -> Self {
        let k = x.cols();
        let (v, lam) = x.vsplit(x.rows() - k);
        Iterate { v, lam }
    }
}

/// Search direction `E = [E_V; E_Lam]`, shaped like an [`Iterate`].
#[derive(Clone, Debug)]
pub struct Direction<T: Scalar> {
    pub ev: Mat<T>,
    pub elam: Mat<T>,
}

impl<T: Scalar> Direction<T> {
    pub fn zeros(n: usize, k: usize) -> Self {
        Direction {
            ev: Mat::zeros(n, k),
            elam: Mat::zeros(k, k),
        }
    }

    pub fn stacked(&self) -> Mat<T> {
        self.ev.vstack(&self.elam)
    }

    pub fn from_stacked(e: &Mat<T>) -> Self {
        let k = e.cols();
        let (ev, elam) = e.vsplit(e.rows() - k);
        Direction { ev, elam }
    }
}

/// A (generalized) nonlinear eigenvector problem `H(V) V = G(V) V Lam`.
///
/// Implementations must keep `H(V)` Hermitian (and `G(V)` when present).
/// Models are immutable after construction and evaluations are pure, so a
/// model can be shared freely across solver calls.
pub trait NepvModel {
    type Field: Scalar;

    fn n(&self) -> usize;
    fn k(&self) -> usize;

    /// Which end of the spectrum the SCF linearization should extract.
    fn spectrum_end(&self) -> SpectrumEnd;

    /// Dense Hermitian `H(V)`.
    fn eval_h(&self, v: &Mat<Self::Field>) -> crate::Result<Mat<Self::Field>>;

    /// Dense `G(V)` for generalized problems, `None` for plain ones.
    fn eval_g(&self, _v: &Mat<Self::Field>) -> crate::Result<Option<Mat<Self::Field>>> {
        Ok(None)
    }

    /// Whether `G(V)` is symmetric positive definite (enables SCF on the
    /// generalized problem through a Cholesky congruence).
    fn g_is_spd(&self) -> bool {
        false
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Exact
    }

    /// Complex models whose derivative action is linear only over real
    /// scalars (conjugations in the derivative break complex linearity).
    fn real_linear_only(&self) -> bool {
        false
    }

    /// Action `L_H(V, E_V) * W` of the derivative of `H` at `V` in direction
    /// `E_V`. Only called when [`NepvModel::derivative_mode`] is `Exact`.
    fn apply_lh_to(
        &self,
        _v: &Mat<Self::Field>,
        _ev: &Mat<Self::Field>,
        _w: &Mat<Self::Field>,
    ) -> crate::Result<Mat<Self::Field>> {
        Err(crate::Error::Capability(
            "model does not implement an exact derivative of H".into(),
        ))
    }

    /// Action `L_G(V, E_V) * W` for generalized problems.
    fn apply_lg_to(
        &self,
        _v: &Mat<Self::Field>,
        _ev: &Mat<Self::Field>,
        _w: &Mat<Self::Field>,
    ) -> crate::Result<Mat<Self::Field>> {
        Err(crate::Error::Capability(
            "model does not implement an exact derivative of G".into(),
        ))
    }
}

/// Matrices reused across many residual/derivative evaluations at one iterate
/// (derivative recycling: evaluate `H(V)` and `G(V)` once, apply many times).
#[derive(Clone, Debug)]
pub struct EvalCache<T: Scalar> {
    pub h: Mat<T>,
    pub g: Option<Mat<T>>,
}

/// Evaluates `H(V)` (and `G(V)`) once for reuse.
pub fn eval_cache<M: NepvModel>(model: &M, v: &Mat<M::Field>) -> crate::Result<EvalCache<M::Field>> {
    Ok(EvalCache {
        h: model.eval_h(v)?,
        g: model.eval_g(v)?,
    })
}

/// Residual `F(X)` using a prepared cache.
pub fn residual<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
    cache: &EvalCache<M::Field>,
) -> Mat<M::Field> {
    let _ = model;
    let hv = cache.h.matmul(&x.v);
    let vlam = x.v.matmul(&x.lam);
    let top = match &cache.g {
        None => &hv - &vlam,
        Some(g) => &hv - &g.matmul(&vlam),
    };
    let mut bottom = x.v.conj_t_mul(&x.v);
    for i in 0..bottom.rows() {
        bottom[(i, i)] -= M::Field::one();
    }
    top.vstack(&bottom)
}

/// Residual at a fresh iterate, returning the cache for reuse.
pub fn residual_fresh<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
) -> crate::Result<(Mat<M::Field>, EvalCache<M::Field>)> {
    let cache = eval_cache(model, &x.v)?;
    Ok((residual(model, x, &cache), cache))
}

/// Default forward-difference step for the derivative fallback:
/// `sqrt(eps) * max(1, ||V||_F) / max(||E_V||_F, eps)`.
pub fn fd_default_step<T: Scalar>(v: &Mat<T>, ev: &Mat<T>) -> f64 {
    let eps = f64::EPSILON;
    eps.sqrt() * frob_norm(v).max(1.0) / frob_norm(ev).max(eps)
}

/// One-sided finite-difference approximation of `L_H(V, E_V)` as a dense
/// matrix: `(H(V + h E_V) - H(V)) / h`. The cached `H(V)` is reused when
/// provided, costing a single extra `H` evaluation.
pub fn fd_apply_lh<M: NepvModel>(
    model: &M,
    v: &Mat<M::Field>,
    ev: &Mat<M::Field>,
    h: f64,
    cached_h: Option<&Mat<M::Field>>,
) -> crate::Result<Mat<M::Field>> {
    debug_assert!(h > 0.0, "finite-difference step must be positive");
    let mut vph = v.clone();
    vph.axpy_re(h, ev);
    let h_shift = model.eval_h(&vph)?;
    let h_base = match cached_h {
        Some(hb) => hb.clone(),
        None => model.eval_h(v)?,
    };
    Ok((&h_shift - &h_base).scale_re(1.0 / h))
}

fn fd_apply_lg<M: NepvModel>(
    model: &M,
    v: &Mat<M::Field>,
    ev: &Mat<M::Field>,
    h: f64,
    cached_g: &Mat<M::Field>,
) -> crate::Result<Mat<M::Field>> {
    let mut vph = v.clone();
    vph.axpy_re(h, ev);
    let g_shift = model.eval_g(&vph)?.ok_or_else(|| {
        crate::Error::Capability("G(V) vanished during finite differencing".into())
    })?;
    Ok((&g_shift - cached_g).scale_re(1.0 / h))
}

/// Directional derivative `L_F(X, E)` of the root function.
///
/// Top block: `H(V)E_V + L_H(V,E_V)V - G(V)(V E_Lam + E_V Lam) - L_G(V,E_V)V Lam`
/// (with `G = I`, `L_G = 0` for plain problems).
/// Bottom block: `V^H E_V + E_V^H V`, which over the complex field is the
/// real-linear directional map of `V^H V`.
pub fn apply_lf<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
    e: &Direction<M::Field>,
    cache: &EvalCache<M::Field>,
) -> crate::Result<Mat<M::Field>> {
    let (v, lam) = (&x.v, &x.lam);
    let (ev, elam) = (&e.ev, &e.elam);

    // V E_Lam + E_V Lam appears in both the plain and generalized top block.
    let mut inner = v.matmul(elam);
    inner.axpy(M::Field::one(), &ev.matmul(lam));

    let mut top = cache.h.matmul(ev);
    match model.derivative_mode() {
        DerivativeMode::Exact => {
            top.axpy(M::Field::one(), &model.apply_lh_to(v, ev, v)?);
        }
        DerivativeMode::FiniteDifference => {
            let h = fd_default_step(v, ev);
            let lh = fd_apply_lh(model, v, ev, h, Some(&cache.h))?;
            top.axpy(M::Field::one(), &lh.matmul(v));
        }
        DerivativeMode::Disabled => {
            return Err(crate::Error::Capability(
                "model provides no derivative and finite differences are disabled".into(),
            ));
        }
    }

    match &cache.g {
        None => top.axpy(-M::Field::one(), &inner),
        Some(g) => {
            top.axpy(-M::Field::one(), &g.matmul(&inner));
            let vlam = v.matmul(lam);
            let lg_vlam = match model.derivative_mode() {
                DerivativeMode::Exact => model.apply_lg_to(v, ev, &vlam)?,
                DerivativeMode::FiniteDifference => {
                    let h = fd_default_step(v, ev);
                    fd_apply_lg(model, v, ev, h, g)?.matmul(&vlam)
                }
                DerivativeMode::Disabled => unreachable!("checked above"),
            };
            top.axpy(-M::Field::one(), &lg_vlam);
        }
    }

    let mut bottom = v.conj_t_mul(ev);
    bottom.axpy(M::Field::one(), &ev.conj_t_mul(v));
    Ok(top.vstack(&bottom))
}

/// Explicit matrix realization `K_F(X)` of the update operator: the unique
/// matrix with `vec(L_F(X,E)) = K_F(X) vec(E)` (columns are the images of the
/// unit directions). Only valid when the derivative is linear over the
/// problem field, and guarded to small test sizes.
pub fn build_kronecker_form<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
) -> crate::Result<Mat<M::Field>> {
    let (n, k) = (x.n(), x.k());
    let dim = (n + k) * k;
    if dim > 2000 {
        return Err(crate::Error::Capability(format!(
            "Kronecker form of dimension {dim} exceeds the test-scale guard of 2000"
        )));
    }
    if model.real_linear_only() {
        return Err(crate::Error::Capability(
            "derivative is only real-linear; no complex Kronecker form exists".into(),
        ));
    }
    let cache = eval_cache(model, &x.v)?;
    let mut kf = Mat::zeros(dim, dim);
    for j in 0..dim {
        let mut unit = Mat::zeros(n + k, k);
        unit.as_mut_slice()[j] = M::Field::one();
        let e = Direction::from_stacked(&unit);
        let image = apply_lf(model, x, &e, &cache)?;
        kf.col_mut(j).copy_from_slice(&vectorize(&image));
    }
    Ok(kf)
}

/// Symmetrized Rayleigh multiplier for a given `V`: the `Lam` minimizing the
/// top-block residual in the Frobenius norm over symmetric `Lam` when `V` is
/// orthonormal. Plain problems: `V^H H V`; generalized ones solve
/// `(V^H G V) Lam = V^H H V` and symmetrize.
pub fn rayleigh_lambda<M: NepvModel>(
    model: &M,
    v: &Mat<M::Field>,
    cache: &EvalCache<M::Field>,
) -> crate::Result<Mat<M::Field>> {
    let _ = model;
    let vhv = v.conj_t_mul(&cache.h.matmul(v));
    let lam = match &cache.g {
        None => vhv,
        Some(g) => {
            let vgv = v.conj_t_mul(&g.matmul(v));
            solve_small(&vgv, &vhv)?
        }
    };
    // Symmetrize to keep the multiplier block Hermitian.
    let lam_h = lam.conj_transpose();
    Ok((&lam + &lam_h).scale_re(0.5))
}

/// Dense Gaussian elimination with partial pivoting for the small `k x k`
/// systems appearing in multiplier initialization.
fn solve_small<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> crate::Result<Mat<T>> {
    let n = a.rows();
    assert!(a.is_square() && b.rows() == n, "solve_small shape mismatch");
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if lu[(r, col)].abs() > lu[(piv, col)].abs() {
                piv = r;
            }
        }
        if lu[(piv, col)].abs() < 1e-300 {
            return Err(crate::Error::Singular(
                "singular projected system in multiplier solve".into(),
            ));
        }
        if piv != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..x.cols() {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        for r in col + 1..n {
            let factor = lu[(r, col)] / lu[(col, col)];
            lu[(r, col)] = T::zero();
            for j in col + 1..n {
                let sub = factor * lu[(col, j)];
                lu[(r, j)] -= sub;
            }
            for j in 0..x.cols() {
                let sub = factor * x[(col, j)];
                x[(r, j)] -= sub;
            }
        }
    }
    for j in 0..x.cols() {
        for r in (0..n).rev() {
            let mut acc = x[(r, j)];
            for c in r + 1..n {
                acc -= lu[(r, c)] * x[(c, j)];
            }
            x[(r, j)] = acc / lu[(r, r)];
        }
    }
    Ok(x)
}

/// A fixed Hermitian matrix as a model: `H(V) = A`, the linear eigenproblem.
/// Used by tests and as the simplest sanity model.
#[derive(Clone, Debug)]
pub struct ConstantModel<T: Scalar> {
    a: Mat<T>,
    k: usize,
    which: SpectrumEnd,
}

impl<T: Scalar> ConstantModel<T> {
    pub fn new(a: Mat<T>, k: usize, which: SpectrumEnd) -> crate::Result<Self> {
        if !a.is_square() {
            return Err(crate::Error::Dimension(format!(
                "constant model needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(ConstantModel { a, k, which })
    }
}

impl<T: Scalar> NepvModel for ConstantModel<T> {
    type Field = T;

    fn n(&self) -> usize {
        self.a.rows()
    }

    fn k(&self) -> usize {
        self.k
    }

    fn spectrum_end(&self) -> SpectrumEnd {
        self.which
    }

    fn eval_h(&self, _v: &Mat<T>) -> crate::Result<Mat<T>> {
        Ok(self.a.clone())
    }

    fn apply_lh_to(&self, _v: &Mat<T>, _ev: &Mat<T>, w: &Mat<T>) -> crate::Result<Mat<T>> {
        Ok(Mat::zeros(w.rows(), w.cols()))
    }
}
