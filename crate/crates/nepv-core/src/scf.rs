//! Self-consistent field iteration.
//!
//! Each step evaluates the current coefficient matrix `H(V_j)` (and `G(V_j)`
//! for generalized problems with positive definite `G`), computes the `k`
//! extremal eigenpairs, and takes the eigenvectors as the next iterate. The
//! loop serves three roles: a standalone solver, the preprocessing phase of
//! the Newton driver, and the diagonalizing postprocessing step applied to a
//! converged Newton iterate.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{sym_eigs_k, SpectrumEnd};
use crate::mat::{frob_norm, Mat, Scalar};
use crate::model::{eval_cache, residual, EvalCache, Iterate, NepvModel};

/// Configuration for [`scf_solve`].
#[derive(Clone, Copy, Debug)]
pub struct ScfConfig {
    /// Convergence target on the residual norm `||F(X_j)||_F`.
    pub tol: f64,
    /// Maximum number of eigensolve steps.
    pub max_iter: usize,
    /// Which spectral end to keep; `None` defers to the model.
    pub which: Option<SpectrumEnd>,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            which: None,
        }
    }
}

impl ScfConfig {
    fn validate(&self) -> crate::Result<()> {
        if !(self.tol > 0.0) {
            return Err(crate::Error::InvalidInput(format!(
                "SCF tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(crate::Error::InvalidInput(
                "SCF needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step record of an SCF run. Entry `j` describes the iterate produced by
/// step `j`, so all vectors have the same length (the number of steps taken).
#[derive(Clone, Debug, Default)]
pub struct ScfTrace {
    /// Residual norms `||F(X_{j+1})||_F`, evaluated at the fresh iterate.
    pub residuals: Vec<f64>,
    /// Eigenvalue estimates per step (`k` values each).
    pub eigenvalues: Vec<Vec<f64>>,
    /// Wall-clock time per step in milliseconds (zero without `std`).
    pub wall_ms: Vec<f64>,
    /// Whether the tolerance was met within the budget.
    pub converged: bool,
}

impl ScfTrace {
    /// Number of eigensolve steps taken.
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Residual norm at the final iterate, if any step was taken.
    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }
}

/// How far from orthonormality the starting block may be.
const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Runs the SCF iteration from an orthonormal starting block `V0`.
///
/// Non-convergence within the budget is not an error: the caller inspects
/// `trace.converged`. Eigensolver failures and capability violations (a
/// generalized problem whose `G(V)` is not positive definite) propagate.
pub fn scf_solve<M: NepvModel>(
    model: &M,
    v0: &Mat<M::Field>,
    cfg: &ScfConfig,
) -> crate::Result<(Iterate<M::Field>, ScfTrace)> {
    let (x, trace, _) = scf_solve_with_cache(model, v0, cfg)?;
    Ok((x, trace))
}

/// As [`scf_solve`], additionally returning the model evaluation at the final
/// iterate so a caller chaining into another phase can reuse it.
pub(crate) fn scf_solve_with_cache<M: NepvModel>(
    model: &M,
    v0: &Mat<M::Field>,
    cfg: &ScfConfig,
) -> crate::Result<(Iterate<M::Field>, ScfTrace, EvalCache<M::Field>)> {
    cfg.validate()?;
    if v0.rows() != model.n() || v0.cols() != model.k() {
        return Err(crate::Error::Dimension(format!(
            "starting block is {}x{}, model expects {}x{}",
            v0.rows(),
            v0.cols(),
            model.n(),
            model.k()
        )));
    }
    let mut gram = v0.conj_t_mul(v0);
    for i in 0..gram.rows() {
        gram[(i, i)] -= M::Field::one();
    }
    if frob_norm(&gram) > ORTHONORMALITY_TOL {
        return Err(crate::Error::InvalidInput(format!(
            "starting block is not orthonormal: ||V0^H V0 - I||_F = {:.3e}",
            frob_norm(&gram)
        )));
    }

    let which = cfg.which.unwrap_or_else(|| model.spectrum_end());
    let mut trace = ScfTrace::default();
    let mut cache = eval_cache(model, v0)?;
    let mut current: Option<Iterate<M::Field>> = None;

    for _ in 0..cfg.max_iter {
        let (step, ms) = crate::wall_clock_ms(|| -> crate::Result<_> {
            let (next, values) = scf_step(model, &cache, which)?;
            // One model evaluation per step: the fresh cache both measures
            // the residual at the new iterate and feeds the next eigensolve.
            let fresh = eval_cache(model, &next.v)?;
            let res = frob_norm(&residual(model, &next, &fresh));
            Ok((next, values, fresh, res))
        });
        let (next, values, fresh, res) = step?;
        cache = fresh;
        trace.residuals.push(res);
        trace.eigenvalues.push(values);
        trace.wall_ms.push(ms);
        current = Some(next);
        if res <= cfg.tol {
            trace.converged = true;
            break;
        }
    }

    Ok((
        current.expect("max_iter >= 1 guarantees a step"),
        trace,
        cache,
    ))
}

/// One diagonalizing step applied to a (near-)converged iterate.
///
/// The result always carries a diagonal `Lambda`. Primary route: a single SCF
/// step from `x.v`; if that increases the residual norm (or the model's
/// generalized `G(V)` does not admit the SCF step), the fallback
/// eigendecomposes `Lambda = Q D Q^H` and returns `V Q, D`, which preserves
/// the spectrum and, for subspace-invariant models, the residual norm.
pub fn scf_postprocess<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
) -> crate::Result<Iterate<M::Field>> {
    let cache = eval_cache(model, &x.v)?;
    let scf_capable = cache.g.is_none() || model.g_is_spd();
    if scf_capable {
        let res_before = frob_norm(&residual(model, x, &cache));
        let (candidate, _) = scf_step(model, &cache, model.spectrum_end())?;
        let fresh = eval_cache(model, &candidate.v)?;
        let res_after = frob_norm(&residual(model, &candidate, &fresh));
        if res_after <= res_before {
            return Ok(candidate);
        }
    }
    rotate_to_diagonal(model, x)
}

/// Fallback diagonalization: `Lambda = Q D Q^H`, `V* = V Q`, `Lambda* = D`.
fn rotate_to_diagonal<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
) -> crate::Result<Iterate<M::Field>> {
    let k = x.k();
    let pairs = sym_eigs_k(&x.lam, k, model.spectrum_end())?;
    let v = x.v.matmul(&pairs.vectors);
    let lam = diag_from(&pairs.values);
    Iterate::new(v, lam)
}

/// One eigensolve step from cached `H(V)` (and `G(V)`).
fn scf_step<M: NepvModel>(
    model: &M,
    cache: &EvalCache<M::Field>,
    which: SpectrumEnd,
) -> crate::Result<(Iterate<M::Field>, Vec<f64>)> {
    let k = model.k();
    let (v, values) = match &cache.g {
        None => {
            let pairs = sym_eigs_k(&cache.h, k, which)?;
            (pairs.vectors, pairs.values)
        }
        Some(g) => {
            if !model.g_is_spd() {
                return Err(crate::Error::Capability(
                    "SCF step on a generalized problem requires positive definite G(V)".into(),
                ));
            }
            generalized_step(&cache.h, g, k, which)?
        }
    };
    let lam = diag_from(&values);
    Ok((Iterate::new(v, lam)?, values))
}

/// Solves the pencil `H W = G W Lambda` for SPD `G` by Cholesky congruence:
/// with `G = L L^H`, the standard problem `(L^{-1} H L^{-H}) Y = Y Lambda`
/// yields `W = L^{-H} Y`. Columns are rescaled to unit length afterwards so
/// the result matches the unit-norm convention of the residual's constraint
/// block (exactly, in the `k = 1` case; diagonal `Lambda` is unaffected by
/// per-column scaling).
fn generalized_step<T: Scalar>(
    h: &Mat<T>,
    g: &Mat<T>,
    k: usize,
    which: SpectrumEnd,
) -> crate::Result<(Mat<T>, Vec<f64>)> {
    let l = cholesky_lower(g)?;
    // C = L^{-1} H L^{-H} computed as L^{-1} (L^{-1} H^H)^H.
    let inner = solve_lower(&l, &h.conj_transpose());
    let c = solve_lower(&l, &inner.conj_transpose());
    let pairs = sym_eigs_k(&c, k, which)?;
    let mut w = solve_lower_adjoint(&l, &pairs.vectors);
    for j in 0..w.cols() {
        let norm = {
            let col = w.col(j);
            let mut s = 0.0;
            for &x in col {
                s += x.abs_sq();
            }
            num_traits::Float::sqrt(s)
        };
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for x in w.col_mut(j) {
                *x = x.scale(inv);
            }
        }
    }
    Ok((w, pairs.values))
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix,
/// generic over the scalar field. The input is Hermitian-symmetrized first.
fn cholesky_lower<T: Scalar>(g: &Mat<T>) -> crate::Result<Mat<T>> {
    if !g.is_square() {
        return Err(crate::Error::Dimension(format!(
            "Cholesky needs a square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let n = g.rows();
    let a = (g + &g.conj_transpose()).scale_re(0.5);
    let mut l = Mat::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re();
        for p in 0..j {
            d -= l[(j, p)].abs_sq();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(crate::Error::Singular(
                "generalized step needs positive definite G(V)".into(),
            ));
        }
        let root = num_traits::Float::sqrt(d);
        l[(j, j)] = T::from_re(root);
        let inv = 1.0 / root;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)].conj();
            }
            l[(i, j)] = s.scale(inv);
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L` by forward substitution.
fn solve_lower<T: Scalar>(l: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = l.rows();
    let mut x = b.clone();
    for j in 0..x.cols() {
        let col = x.col_mut(j);
        for i in 0..n {
            let mut s = col[i];
            for p in 0..i {
                s -= l[(i, p)] * col[p];
            }
            col[i] = s.scale(1.0 / l[(i, i)].re());
        }
    }
    x
}

/// Solves `L^H X = B` by back substitution (diagonal of `L` is real).
fn solve_lower_adjoint<T: Scalar>(l: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = l.rows();
    let mut x = b.clone();
    for j in 0..x.cols() {
        let col = x.col_mut(j);
        for i in (0..n).rev() {
            let mut s = col[i];
            for p in (i + 1)..n {
                s -= l[(p, i)].conj() * col[p];
            }
            col[i] = s.scale(1.0 / l[(i, i)].re());
        }
    }
    x
}

/// Diagonal matrix from a list of real values, in the working field.
pub fn diag_from<T: Scalar>(values: &[f64]) -> Mat<T> {
    let k = values.len();
    Mat::from_fn(k, k, |i, j| {
        if i == j {
            T::from_re(values[i])
        } else {
            T::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig_full;
    use crate::model::{residual_fresh, ConstantModel, DerivativeMode};
    use num_complex::Complex64;

    fn xorshift(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    fn random_symmetric(n: usize, seed: u64) -> Mat<f64> {
        let mut next = xorshift(seed);
        let mut a = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let x = next();
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    fn random_orthonormal(n: usize, k: usize, seed: u64) -> Mat<f64> {
        let mut next = xorshift(seed);
        let mut v = Mat::from_fn(n, k, |_, _| next());
        // Gram-Schmidt, twice for safety.
        for _pass in 0..2 {
            for j in 0..k {
                for p in 0..j {
                    let mut dot = 0.0;
                    for i in 0..n {
                        dot += v[(i, p)] * v[(i, j)];
                    }
                    for i in 0..n {
                        let correction = dot * v[(i, p)];
                        v[(i, j)] -= correction;
                    }
                }
                let mut norm = 0.0;
                for i in 0..n {
                    norm += v[(i, j)] * v[(i, j)];
                }
                let norm = norm.sqrt();
                for i in 0..n {
                    v[(i, j)] /= norm;
                }
            }
        }
        v
    }

    /// Mild nonlinear test model: H(V) = A + gamma * Diag(rho(V)).
    struct DensityModel {
        a: Mat<f64>,
        gamma: f64,
        k: usize,
    }

    impl NepvModel for DensityModel {
        type Field = f64;
        fn n(&self) -> usize {
            self.a.rows()
        }
        fn k(&self) -> usize {
            self.k
        }
        fn spectrum_end(&self) -> SpectrumEnd {
            SpectrumEnd::Smallest
        }
        fn eval_h(&self, v: &Mat<f64>) -> crate::Result<Mat<f64>> {
            let mut h = self.a.clone();
            for i in 0..self.n() {
                let mut rho = 0.0;
                for j in 0..self.k {
                    rho += v[(i, j)] * v[(i, j)];
                }
                h[(i, i)] += self.gamma * rho;
            }
            Ok(h)
        }
        fn derivative_mode(&self) -> DerivativeMode {
            DerivativeMode::FiniteDifference
        }
    }

    #[test]
    fn constant_model_converges_in_one_step() {
        let a = random_symmetric(12, 7);
        let model = ConstantModel::new(a.clone(), 3, SpectrumEnd::Smallest).unwrap();
        let v0 = random_orthonormal(12, 3, 99);
        let cfg = ScfConfig {
            tol: 1e-10,
            max_iter: 5,
            which: None,
        };
        let (x, trace) = scf_solve(&model, &v0, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations(), 1);
        assert!(trace.residuals[0] <= 1e-10);

        // The fixed point matches the eigensolver output exactly.
        let pairs = sym_eigs_k(&a, 3, SpectrumEnd::Smallest).unwrap();
        for j in 0..3 {
            assert!((x.lam[(j, j)] - pairs.values[j]).abs() <= 1e-12);
            for i in 0..12 {
                assert!((x.v[(i, j)] - pairs.vectors[(i, j)]).abs() <= 1e-12);
            }
        }
        // Lambda is diagonal by construction.
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(x.lam[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_model_is_a_fixed_point_after_first_step() {
        let a = random_symmetric(10, 21);
        let model = ConstantModel::new(a, 2, SpectrumEnd::Largest).unwrap();
        let v0 = random_orthonormal(10, 2, 5);
        let cfg = ScfConfig {
            tol: 1e-300, // unattainable: force both steps
            max_iter: 2,
            which: None,
        };
        let (x, trace) = scf_solve(&model, &v0, &cfg).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations(), 2);
        // Step two reproduces step one (deterministic sign fixing).
        assert!(trace.residuals[1] <= 1e-12);
        let (r, _) = residual_fresh(&model, &x).unwrap();
        assert!(frob_norm(&r) <= 1e-12);
    }

    #[test]
    fn iterates_stay_orthonormal_and_eigen_consistent() {
        let a = random_symmetric(16, 3);
        let model = DensityModel { a, gamma: 0.4, k: 2 };
        let v0 = random_orthonormal(16, 2, 17);
        let cfg = ScfConfig {
            tol: 1e-11,
            max_iter: 100,
            which: None,
        };
        let (x, trace) = scf_solve(&model, &v0, &cfg).unwrap();
        assert!(trace.converged, "mild nonlinearity should converge");
        let mut gram = x.v.conj_t_mul(&x.v);
        for i in 0..2 {
            gram[(i, i)] -= 1.0;
        }
        assert!(frob_norm(&gram) <= 1e-12);
        // Residual and eigenvalue histories have consistent lengths.
        assert_eq!(trace.residuals.len(), trace.eigenvalues.len());
        for vals in &trace.eigenvalues {
            assert_eq!(vals.len(), 2);
        }
    }

    #[test]
    fn rejects_non_orthonormal_start_and_bad_config() {
        let a = random_symmetric(6, 11);
        let model = ConstantModel::new(a, 2, SpectrumEnd::Smallest).unwrap();
        let mut v0 = random_orthonormal(6, 2, 3);
        v0[(0, 0)] += 0.5;
        let err = scf_solve(&model, &v0, &ScfConfig::default()).unwrap_err();
        assert!(matches!(err, crate::Error::InvalidInput(_)));

        let v0 = random_orthonormal(6, 2, 3);
        let bad_tol = ScfConfig {
            tol: 0.0,
            ..ScfConfig::default()
        };
        assert!(scf_solve(&model, &v0, &bad_tol).is_err());
        let bad_iter = ScfConfig {
            max_iter: 0,
            ..ScfConfig::default()
        };
        assert!(scf_solve(&model, &v0, &bad_iter).is_err());
    }

    #[test]
    fn which_override_selects_the_other_end() {
        let a = random_symmetric(9, 42);
        let model = ConstantModel::new(a.clone(), 2, SpectrumEnd::Smallest).unwrap();
        let v0 = random_orthonormal(9, 2, 8);
        let cfg = ScfConfig {
            tol: 1e-10,
            max_iter: 3,
            which: Some(SpectrumEnd::Largest),
        };
        let (x, trace) = scf_solve(&model, &v0, &cfg).unwrap();
        assert!(trace.converged);
        let pairs = sym_eigs_k(&a, 2, SpectrumEnd::Largest).unwrap();
        for j in 0..2 {
            assert!((x.lam[(j, j)] - pairs.values[j]).abs() <= 1e-12);
        }
    }

    /// Constant generalized pencil H W = G W Lambda with SPD G.
    struct PencilModel {
        h: Mat<f64>,
        g: Mat<f64>,
        k: usize,
    }

    impl NepvModel for PencilModel {
        type Field = f64;
        fn n(&self) -> usize {
            self.h.rows()
        }
        fn k(&self) -> usize {
            self.k
        }
        fn spectrum_end(&self) -> SpectrumEnd {
            SpectrumEnd::Smallest
        }
        fn eval_h(&self, _v: &Mat<f64>) -> crate::Result<Mat<f64>> {
            Ok(self.h.clone())
        }
        fn eval_g(&self, _v: &Mat<f64>) -> crate::Result<Option<Mat<f64>>> {
            Ok(Some(self.g.clone()))
        }
        fn g_is_spd(&self) -> bool {
            true
        }
        fn derivative_mode(&self) -> DerivativeMode {
            DerivativeMode::FiniteDifference
        }
    }

    fn random_spd(n: usize, seed: u64) -> Mat<f64> {
        let b = random_symmetric(n, seed);
        let mut g = b.conj_t_mul(&b);
        for i in 0..n {
            g[(i, i)] += n as f64;
        }
        g
    }

    #[test]
    fn generalized_step_solves_the_pencil_exactly_for_k1() {
        let n = 8;
        let h = random_symmetric(n, 31);
        let g = random_spd(n, 77);
        let model = PencilModel { h: h.clone(), g: g.clone(), k: 1 };
        let v0 = random_orthonormal(n, 1, 2);
        let cfg = ScfConfig {
            tol: 1e-10,
            max_iter: 4,
            which: None,
        };
        let (x, trace) = scf_solve(&model, &v0, &cfg).unwrap();
        // One step reaches the exact pencil eigenpair: the unit-norm scaling
        // cancels in H w - G w lambda, and the constraint block is exactly 0.
        assert!(trace.converged);
        assert_eq!(trace.iterations(), 1);
        let hw = h.matmul(&x.v);
        let gwl = g.matmul(&x.v.matmul(&x.lam));
        assert!(frob_norm(&(&hw - &gwl)) <= 1e-9 * frob_norm(&h));
        let mut norm = 0.0;
        for i in 0..n {
            norm += x.v[(i, 0)] * x.v[(i, 0)];
        }
        assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn generalized_step_matches_dense_congruence_oracle() {
        // Oracle: eigendecompose L^{-1} H L^{-T} with the f64-only dense
        // Cholesky from linalg, independently of the generic path.
        use crate::linalg::Cholesky;
        let n = 7;
        let h = random_symmetric(n, 13);
        let g = random_spd(n, 14);
        let chol = Cholesky::new(&g).unwrap();
        let c = chol.congruence(&h);
        let (values, _) = sym_eig_full(&c).unwrap();

        let (_, vals) = generalized_step::<f64>(&h, &g, 3, SpectrumEnd::Smallest).unwrap();
        for j in 0..3 {
            assert!(
                (vals[j] - values[j]).abs() <= 1e-10,
                "pencil eigenvalue mismatch: {} vs {}",
                vals[j],
                values[j]
            );
        }
    }

    #[test]
    fn generalized_scf_rejects_non_spd_g() {
        struct BadG;
        impl NepvModel for BadG {
            type Field = f64;
            fn n(&self) -> usize {
                4
            }
            fn k(&self) -> usize {
                1
            }
            fn spectrum_end(&self) -> SpectrumEnd {
                SpectrumEnd::Smallest
            }
            fn eval_h(&self, _v: &Mat<f64>) -> crate::Result<Mat<f64>> {
                Ok(Mat::identity(4))
            }
            fn eval_g(&self, _v: &Mat<f64>) -> crate::Result<Option<Mat<f64>>> {
                Ok(Some(Mat::identity(4)))
            }
            // g_is_spd stays false: the model does not vouch for G.
        }
        let v0 = random_orthonormal(4, 1, 9);
        let err = scf_solve(&BadG, &v0, &ScfConfig::default()).unwrap_err();
        assert!(matches!(err, crate::Error::Capability(_)));
    }

    #[test]
    fn cholesky_lower_reconstructs_complex_hpd() {
        let n = 5;
        let mut next = xorshift(55);
        let b = Mat::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        let mut g = b.conj_t_mul(&b);
        for i in 0..n {
            g[(i, i)] += Complex64::new(n as f64, 0.0);
        }
        let l = cholesky_lower(&g).unwrap();
        let rebuilt = l.matmul(&l.conj_transpose());
        assert!(frob_norm(&(&rebuilt - &g)) <= 1e-10 * frob_norm(&g));
        // Triangular solves invert the factor.
        let x = Mat::from_fn(n, 2, |_, _| Complex64::new(next(), next()));
        let y = solve_lower(&l, &l.matmul(&x));
        assert!(frob_norm(&(&y - &x)) <= 1e-10);
        let z = solve_lower_adjoint(&l, &l.conj_transpose().matmul(&x));
        assert!(frob_norm(&(&z - &x)) <= 1e-10);
    }

    #[test]
    fn postprocess_keeps_an_exact_diagonal_solution() {
        let a = random_symmetric(10, 3);
        let model = ConstantModel::new(a.clone(), 2, SpectrumEnd::Smallest).unwrap();
        let pairs = sym_eigs_k(&a, 2, SpectrumEnd::Smallest).unwrap();
        let x = Iterate::new(pairs.vectors.clone(), diag_from(&pairs.values)).unwrap();
        let out = scf_postprocess(&model, &x).unwrap();
        // Identical up to column sign; deterministic sign fixing makes it exact.
        assert!(frob_norm(&(&out.v - &pairs.vectors)) <= 1e-12);
        assert!(frob_norm(&(&out.lam - &x.lam)) <= 1e-12);
    }

    #[test]
    fn postprocess_diagonalizes_a_rotated_solution() {
        let a = random_symmetric(10, 19);
        let model = ConstantModel::new(a.clone(), 3, SpectrumEnd::Smallest).unwrap();
        let pairs = sym_eigs_k(&a, 3, SpectrumEnd::Smallest).unwrap();
        // Rotate: V' = V Q, Lambda' = Q^T Lambda Q still solves the problem
        // but with a non-diagonal symmetric Lambda.
        let q_src = random_symmetric(3, 4);
        let (_, q) = sym_eig_full(&q_src).unwrap();
        let vp = pairs.vectors.matmul(&q);
        let lam = diag_from::<f64>(&pairs.values);
        let lamp = q.conj_t_mul(&lam.matmul(&q));
        let x = Iterate::new(vp, lamp).unwrap();
        let (r, _) = residual_fresh(&model, &x).unwrap();
        assert!(frob_norm(&r) <= 1e-12, "rotated input still solves the problem");

        let out = scf_postprocess(&model, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(out.lam[(i, j)].abs() <= 1e-12, "Lambda* must be diagonal");
                }
            }
        }
        // Same spectrum to 1e-10.
        let mut got: Vec<f64> = (0..3).map(|i| out.lam[(i, i)]).collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut want = pairs.values.clone();
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() <= 1e-10);
        }
        let (r, _) = residual_fresh(&model, &out).unwrap();
        assert!(frob_norm(&r) <= 1e-10, "postprocessing preserves the solution");
    }

    #[test]
    fn postprocess_uses_rotation_route_when_scf_step_is_unavailable() {
        // Rank-one G: g_is_spd() is false, so the SCF step must not run and
        // the rotation fallback applies directly.
        struct RankOneG {
            h: Mat<f64>,
        }
        impl NepvModel for RankOneG {
            type Field = f64;
            fn n(&self) -> usize {
                self.h.rows()
            }
            fn k(&self) -> usize {
                1
            }
            fn spectrum_end(&self) -> SpectrumEnd {
                SpectrumEnd::Largest
            }
            fn eval_h(&self, _v: &Mat<f64>) -> crate::Result<Mat<f64>> {
                Ok(self.h.clone())
            }
            fn eval_g(&self, v: &Mat<f64>) -> crate::Result<Option<Mat<f64>>> {
                // G = v v^T: rank one, never SPD for n > 1.
                Ok(Some(v.matmul(&v.conj_transpose())))
            }
        }
        let h = random_symmetric(5, 23);
        let model = RankOneG { h };
        let v = random_orthonormal(5, 1, 6);
        let x = Iterate::new(v.clone(), Mat::from_fn(1, 1, |_, _| 2.5)).unwrap();
        let out = scf_postprocess(&model, &x).unwrap();
        // k = 1: the rotation is a sign; the eigenvalue is unchanged.
        assert!((out.lam[(0, 0)] - 2.5).abs() <= 1e-12);
        assert!((frob_norm(&out.v) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn trace_lengths_are_consistent_on_non_convergence() {
        let a = random_symmetric(14, 29);
        let model = DensityModel { a, gamma: 50.0, k: 2 };
        let v0 = random_orthonormal(14, 2, 77);
        let cfg = ScfConfig {
            tol: 1e-12,
            max_iter: 25,
            which: None,
        };
        let (x, trace) = scf_solve(&model, &v0, &cfg).unwrap();
        // Strong coupling: SCF is expected to stall. Not an error.
        assert_eq!(trace.iterations(), trace.eigenvalues.len());
        assert_eq!(trace.iterations(), trace.wall_ms.len());
        assert!(trace.iterations() <= 25);
        assert_eq!(x.v.cols(), 2);
        if !trace.converged {
            assert!(trace.final_residual().unwrap() > 1e-12);
        }
    }
}
