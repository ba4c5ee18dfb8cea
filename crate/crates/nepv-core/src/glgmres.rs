//! Global GMRES for the matrix update equation `L(E) = B`.
//!
//! The Krylov space is built from matrices: the basis `V_1, V_2, ...` is
//! Frobenius-orthonormal, the operator is applied blockwise, and the small
//! least-squares problem `min || Hbar c - beta e_1 ||` is reduced incrementally
//! with Givens rotations so the residual estimate is available after every
//! step. Orthogonalization is modified Gram-Schmidt by default with
//! re-orthogonalized classical Gram-Schmidt (CGS2) as an option.
//!
//! Coefficients are kept real throughout: the inner product is
//! `Re <X, Y>_F`, which coincides with the Frobenius inner product over the
//! reals and realizes complex problems with real-linear operators as Krylov
//! processes over the real field.
//!
//! Before a solution is accepted, the true residual `||B - L(E)||_F` is
//! recomputed explicitly; the Givens estimate alone never terminates a solve.

use alloc::vec;
use alloc::vec::Vec;

use crate::mat::{frob_inner_re, frob_norm, Mat, Scalar};
#[allow(unused_imports)]
use num_traits::Float;

/// Orthogonalization scheme for the Arnoldi process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ortho {
    /// Modified Gram-Schmidt (default).
    Mgs,
    /// Classical Gram-Schmidt with one full re-orthogonalization pass.
    Cgs2,
}

/// Relative Frobenius-norm drop below which a new Arnoldi direction counts as
/// a happy breakdown (the operator maps the basis into itself).
pub const BREAKDOWN_EPS: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct GlGmresConfig {
    /// Maximum Krylov dimension per cycle.
    pub max_krylov: usize,
    /// Number of restart cycles after the first (0 = single cycle).
    pub max_restarts: usize,
    pub ortho: Ortho,
    /// Relative residual target; a Newton driver sets this to its forcing
    /// term for each outer iteration.
    pub rel_tol: f64,
}

impl Default for GlGmresConfig {
    fn default() -> Self {
        GlGmresConfig {
            max_krylov: 200,
            max_restarts: 0,
            ortho: Ortho::Mgs,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GlGmresReport {
    /// Arnoldi steps summed over all cycles (operator application count,
    /// excluding the residual recomputations).
    pub iterations_total: usize,
    pub restarts: usize,
    /// True relative residual of the returned update.
    pub achieved_rel_residual: f64,
    pub converged: bool,
}

/// Arnoldi state of one cycle: orthonormal matrix basis, Hessenberg columns,
/// and their incrementally maintained Givens reduction.
pub struct GlGmresState<T: Scalar> {
    basis: Vec<Mat<T>>,
    /// Raw Hessenberg columns; column `i` holds `i + 2` entries.
    hess: Vec<Vec<f64>>,
    /// Triangularized columns of the reduced system.
    tri: Vec<Vec<f64>>,
    /// Accumulated rotation pairs (c, s).
    givens: Vec<(f64, f64)>,
    /// Transformed right-hand side; entry `len` is the signed residual
    /// estimate.
    rhs_reduced: Vec<f64>,
    beta: f64,
}

/// Outcome of one Arnoldi extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArnoldiOutcome {
    Extended,
    /// The new direction vanished: the Krylov space is invariant and the
    /// least-squares solution is exact in exact arithmetic.
    Breakdown,
}

impl<T: Scalar> GlGmresState<T> {
    /// Starts a cycle from the initial residual `r0` (nonzero).
    pub fn new(r0: &Mat<T>) -> Self {
        let beta = frob_norm(r0);
        assert!(beta > 0.0, "cycle must start from a nonzero residual");
        GlGmresState {
            basis: vec![r0.scale_re(1.0 / beta)],
            hess: Vec::new(),
            tri: Vec::new(),
            givens: Vec::new(),
            rhs_reduced: vec![beta],
            beta,
        }
    }

    /// Number of completed Arnoldi steps (columns of the Hessenberg).
    pub fn steps(&self) -> usize {
        self.hess.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn basis(&self) -> &[Mat<T>] {
        &self.basis
    }

    /// Dense `(steps+1) x steps` Hessenberg matrix (test and inspection use).
    pub fn hessenberg(&self) -> Mat<f64> {
        let l = self.steps();
        let mut h = Mat::zeros(l + 1, l);
        for (j, col) in self.hess.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                h[(i, j)] = v;
            }
        }
        h
    }

    /// Current minimal-residual estimate `|g_{l+1}|` from the Givens
    /// reduction, available without back-substitution.
    pub fn residual_estimate(&self) -> f64 {
        self.rhs_reduced[self.steps()].abs()
    }

    /// Last basis matrix `V_m`, the operand of the next Arnoldi step.
    pub fn last_basis(&self) -> &Mat<T> {
        self.basis.last().expect("basis never empty")
    }

    fn push_reduced_column(&mut self, mut col: Vec<f64>) {
        let l = self.tri.len();
        // Apply the accumulated rotations to the new column.
        for (i, &(c, s)) in self.givens.iter().enumerate() {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = -s * a + c * b;
        }
        // New rotation annihilating the subdiagonal entry.
        let (a, b) = (col[l], col[l + 1]);
        let r = a.hypot(b);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
        col[l] = r;
        col.truncate(l + 1);
        self.givens.push((c, s));
        self.tri.push(col);
        let g = self.rhs_reduced[l];
        self.rhs_reduced[l] = c * g;
        self.rhs_reduced.push(-s * g);
    }
}

/// Orthogonalizes `w` against the basis and extends the state.
///
/// The Hessenberg column (projection coefficients plus the norm of the
/// remainder) is recorded and reduced even on breakdown, so the least-squares
/// problem stays consistent; the basis itself is only extended when the
/// remainder is numerically nonzero.
pub fn arnoldi_step<T: Scalar>(
    state: &mut GlGmresState<T>,
    w_in: Mat<T>,
    ortho: Ortho,
) -> ArnoldiOutcome {
    let w_in_norm = frob_norm(&w_in);
    let mut w = w_in;
    let l = state.basis.len();
    let mut h = vec![0.0; l + 1];

    match ortho {
        Ortho::Mgs => {
            for (i, v) in state.basis.iter().enumerate() {
                let hi = frob_inner_re(v, &w);
                w.axpy_re(-hi, v);
                h[i] = hi;
            }
        }
        Ortho::Cgs2 => {
            // Classical projection coefficients are computed against the
            // unmodified w of each pass, then subtracted; the recorded h is
            // the sum over both passes.
            for _pass in 0..2 {
                let coeffs: Vec<f64> = state.basis.iter().map(|v| frob_inner_re(v, &w)).collect();
                for (i, (v, &ci)) in state.basis.iter().zip(&coeffs).enumerate() {
                    h[i] += ci;
                    w.axpy_re(-ci, v);
                }
            }
        }
    }

    let nrm = frob_norm(&w);
    h[l] = nrm;
    let breakdown = nrm <= BREAKDOWN_EPS * w_in_norm.max(1e-306);
    state.hess.push(h.clone());
    state.push_reduced_column(h);
    if breakdown {
        ArnoldiOutcome::Breakdown
    } else {
        state.basis.push(w.scale_re(1.0 / nrm));
        ArnoldiOutcome::Extended
    }
}

/// Solves the reduced least-squares problem by back-substitution on the
/// triangularized columns. A zero diagonal entry (possible only at
/// breakdown) drops that column: its coefficient is set to zero.
pub fn hessenberg_lsq<T: Scalar>(state: &GlGmresState<T>) -> Vec<f64> {
    let l = state.steps();
    let mut c = vec![0.0; l];
    for j in (0..l).rev() {
        let mut acc = state.rhs_reduced[j];
        for j2 in j + 1..l {
            acc -= state.tri[j2][j] * c[j2];
        }
        let diag = state.tri[j][j];
        c[j] = if diag == 0.0 { 0.0 } else { acc / diag };
    }
    c
}

/// Per-cycle record kept by [`solve_update_with_history`]: the iterate after
/// each Arnoldi step of the first cycle, the final Hessenberg, and the basis.
pub struct CycleHistory<T: Scalar> {
    pub iterates: Vec<Mat<T>>,
    pub hessenberg: Mat<f64>,
    pub basis: Vec<Mat<T>>,
}

/// Minimal-residual solve of `apply(E) = B` over matrix Krylov spaces.
///
/// Returns when the explicitly recomputed true residual satisfies
/// `||B - apply(E)||_F <= rel_tol * ||B||_F`, or when the Krylov and restart
/// budgets are exhausted, in which case the best iterate seen so far is
/// returned with `converged = false`.
pub fn solve_update<T: Scalar>(
    apply: impl Fn(&Mat<T>) -> Mat<T>,
    b: &Mat<T>,
    e0: &Mat<T>,
    cfg: &GlGmresConfig,
) -> (Mat<T>, GlGmresReport) {
    let (e, report, _) = solve_impl(apply, b, e0, cfg, false);
    (e, report)
}

/// As [`solve_update`], additionally recording the first cycle's iterates and
/// Arnoldi data (the equivalence tests against vector GMRES rely on this).
pub fn solve_update_with_history<T: Scalar>(
    apply: impl Fn(&Mat<T>) -> Mat<T>,
    b: &Mat<T>,
    e0: &Mat<T>,
    cfg: &GlGmresConfig,
) -> (Mat<T>, GlGmresReport, CycleHistory<T>) {
    let (e, report, hist) = solve_impl(apply, b, e0, cfg, true);
    (e, report, hist.expect("history requested"))
}

fn assemble<T: Scalar>(e_base: &Mat<T>, state: &GlGmresState<T>, coeffs: &[f64]) -> Mat<T> {
    let mut e = e_base.clone();
    for (ci, v) in coeffs.iter().zip(&state.basis) {
        e.axpy_re(*ci, v);
    }
    e
}

fn solve_impl<T: Scalar>(
    apply: impl Fn(&Mat<T>) -> Mat<T>,
    b: &Mat<T>,
    e0: &Mat<T>,
    cfg: &GlGmresConfig,
    want_history: bool,
) -> (Mat<T>, GlGmresReport, Option<CycleHistory<T>>) {
    assert!(cfg.max_krylov >= 1, "max_krylov must be at least 1");
    assert!(
        cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0,
        "rel_tol must lie in (0, 1)"
    );

    let bnorm = frob_norm(b);
    let mut report = GlGmresReport::default();
    let mut history = want_history.then(|| CycleHistory {
        iterates: Vec::new(),
        hessenberg: Mat::zeros(1, 0),
        basis: Vec::new(),
    });

    if bnorm == 0.0 {
        report.converged = true;
        return (e0.clone(), report, history);
    }
    let target = cfg.rel_tol * bnorm;

    let mut e = e0.clone();
    let mut best_e = e.clone();
    let mut best_res = frob_norm(&(b - &apply(&e)));

    for cycle in 0..=cfg.max_restarts {
        report.restarts = cycle;
        let r0 = b - &apply(&e);
        let r0_norm = frob_norm(&r0);
        if r0_norm <= target {
            report.achieved_rel_residual = r0_norm / bnorm;
            report.converged = true;
            return (e, report, history);
        }
        let mut state = GlGmresState::new(&r0);

        let mut cycle_done = false;
        while state.steps() < cfg.max_krylov && !cycle_done {
            let w = apply(state.last_basis());
            let outcome = arnoldi_step(&mut state, w, cfg.ortho);
            report.iterations_total += 1;

            if let Some(h) = history.as_mut() {
                if cycle == 0 {
                    h.iterates
                        .push(assemble(&e, &state, &hessenberg_lsq(&state)));
                }
            }

            if state.residual_estimate() <= target || outcome == ArnoldiOutcome::Breakdown {
                let cand = assemble(&e, &state, &hessenberg_lsq(&state));
                let true_res = frob_norm(&(b - &apply(&cand)));
                if true_res < best_res {
                    best_res = true_res;
                    best_e = cand.clone();
                }
                if true_res <= target {
                    if let Some(h) = history.as_mut() {
                        if cycle == 0 {
                            h.hessenberg = state.hessenberg();
                            h.basis = state.basis.clone();
                        }
                    }
                    report.achieved_rel_residual = true_res / bnorm;
                    report.converged = true;
                    return (cand, report, history);
                }
                // The estimate undershot the true residual (or the space
                // became invariant without reaching the target): stop the
                // cycle on breakdown, otherwise keep extending.
                if outcome == ArnoldiOutcome::Breakdown {
                    e = cand;
                    cycle_done = true;
                }
            }
        }

        if !cycle_done {
            let cand = assemble(&e, &state, &hessenberg_lsq(&state));
            let true_res = frob_norm(&(b - &apply(&cand)));
            if true_res < best_res {
                best_res = true_res;
                best_e = cand.clone();
            }
            e = cand;
        }
        if let Some(h) = history.as_mut() {
            if cycle == 0 {
                h.hessenberg = state.hessenberg();
                h.basis = state.basis.clone();
            }
        }
        if best_res <= target {
            report.achieved_rel_residual = best_res / bnorm;
            report.converged = true;
            return (best_e, report, history);
        }
    }

    report.achieved_rel_residual = best_res / bnorm;
    report.converged = best_res <= target;
    (best_e, report, history)
}
