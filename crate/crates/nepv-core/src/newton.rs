//! Inexact matrix Newton driver.
//!
//! One outer iteration solves the update equation `L_F(X_j, E_j) = -F(X_j)`
//! inexactly (global GMRES to a relative tolerance given by an adaptive
//! forcing term), damps the step by quadratic-interpolation backtracking
//! until a sufficient residual decrease holds, and updates the forcing term
//! from how well the linear model predicted the new residual. The driver is
//! bracketed by SCF phases: a few preprocessing steps produce a starting
//! point (and seed the first forcing term), and one postprocessing step
//! restores a diagonal multiplier block at the end.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_traits::Float;

use crate::glgmres::{self, GlGmresConfig, GlGmresReport};
use crate::mat::{devectorize, frob_inner_re, frob_norm, vectorize, Mat, Scalar};
use crate::model::{
    apply_lf, eval_cache, rayleigh_lambda, residual, Direction, EvalCache, Iterate, NepvModel,
};
use crate::scf::{scf_postprocess, scf_solve_with_cache, ScfConfig};
use crate::vecgmres;

/// Smallest forcing term ever requested; a raw value of zero would demand an
/// exact inner solve.
pub const ETA_FLOOR: f64 = 1e-12;

/// Adaptive forcing-term schedule parameters.
#[derive(Clone, Copy, Debug)]
pub struct ForcingConfig {
    /// Fallback initial forcing term when no preprocessing history exists.
    pub eta0: f64,
    /// Factor of the residual-ratio rule.
    pub gamma_ew: f64,
    /// Exponent of both rules and their safeguards.
    pub alpha_ew: f64,
    /// Upper cap on every forcing term.
    pub eta_max: f64,
    /// Safeguards only engage above this level, so that a genuinely fast
    /// step may still drive the next tolerance far down.
    pub oversolve_floor: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            eta0: 0.5,
            gamma_ew: 0.9,
            alpha_ew: 0.5 * (1.0 + Float::sqrt(5.0_f64)),
            eta_max: 0.9,
            oversolve_floor: 0.1,
        }
    }
}

impl ForcingConfig {
    fn validate(&self) -> crate::Result<()> {
        let ok = (0.0..1.0).contains(&self.eta0)
            && (0.0..=1.0).contains(&self.gamma_ew)
            && self.alpha_ew > 1.0
            && self.alpha_ew <= 2.0
            && self.eta_max > 0.0
            && self.eta_max < 1.0
            && self.oversolve_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidInput(format!(
                "forcing parameters out of range: {self:?}"
            )))
        }
    }
}

/// Residual-gap forcing term: how much of the previous residual the linear
/// model failed to explain, `|  ||F_j|| - ||R_{j-1}||  | / ||F_{j-1}||`,
/// safeguarded by `eta_{j-1}^alpha` and clamped to `(0, eta_max]`.
pub fn forcing_choice1(
    fnorm_j: f64,
    fnorm_jm1: f64,
    update_residual_norm_jm1: f64,
    eta_jm1: f64,
    cfg: &ForcingConfig,
) -> f64 {
    let raw = (fnorm_j - update_residual_norm_jm1).abs() / fnorm_jm1;
    let mut eta = raw.max(ETA_FLOOR);
    let safeguard = Float::powf(eta_jm1, cfg.alpha_ew);
    if safeguard > cfg.oversolve_floor {
        eta = eta.max(safeguard);
    }
    eta.min(cfg.eta_max)
}

/// Residual-ratio forcing term `gamma (||F_j|| / ||F_{j-1}||)^alpha`,
/// safeguarded by `gamma eta_{j-1}^alpha` and clamped to `(0, eta_max]`.
pub fn forcing_choice2(fnorm_j: f64, fnorm_jm1: f64, eta_jm1: f64, cfg: &ForcingConfig) -> f64 {
    let raw = cfg.gamma_ew * Float::powf(fnorm_j / fnorm_jm1, cfg.alpha_ew);
    let mut eta = raw.max(ETA_FLOOR);
    let safeguard = cfg.gamma_ew * Float::powf(eta_jm1, cfg.alpha_ew);
    if safeguard > cfg.oversolve_floor {
        eta = eta.max(safeguard);
    }
    eta.min(cfg.eta_max)
}

/// Backtracking-damping parameters.
#[derive(Clone, Copy, Debug)]
pub struct BacktrackConfig {
    /// Sufficient-decrease parameter in
    /// `||F(X + E)|| <= [1 - t (1 - eta)] ||F(X)||`.
    pub t: f64,
    /// Damping attempts before the last damped step is accepted anyway.
    pub max_backtracks: usize,
    /// Clamp on each interpolated damping factor.
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for BacktrackConfig {
    fn default() -> Self {
        Self {
            t: 1e-4,
            max_backtracks: 4,
            theta_min: 0.1,
            theta_max: 0.5,
        }
    }
}

impl BacktrackConfig {
    fn validate(&self) -> crate::Result<()> {
        let ok = self.t > 0.0
            && self.t < 1.0
            && self.theta_min > 0.0
            && self.theta_min < self.theta_max
            && self.theta_max < 1.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidInput(format!(
                "backtracking parameters out of range: {self:?}"
            )))
        }
    }
}

/// Result of one damped step, carrying the already-evaluated next iterate so
/// the driver never re-evaluates the model.
pub struct BacktrackOutcome<T: Scalar> {
    pub next: Iterate<T>,
    pub next_residual: Mat<T>,
    pub next_cache: EvalCache<T>,
    pub next_norm: f64,
    /// Forcing term after damping, `1 - theta (1 - eta)` per damping step.
    pub eta_effective: f64,
    /// Product of all damping factors applied to the step.
    pub theta_total: f64,
    pub backtracks: usize,
    /// Whether the sufficient-decrease condition was met (when `false`, the
    /// last damped step is returned anyway and the outer loop continues).
    pub accepted: bool,
}

/// Damps the update `E` by quadratic interpolation until the residual
/// decrease `||F(X+E)|| <= [1 - t (1 - eta)] ||F(X)||` holds.
///
/// `fx` is `F(X)` and `lfe` is `L_F(X, E)` for the undamped step; both are
/// already available in the driver. The interpolation minimizes the quadratic
/// through `g(0) = ||F(X)||^2`, `g(1) = ||F(X+E)||^2` and
/// `g'(0) = 2 <L_F(X,E), F(X)>`, clamping each factor to the configured
/// bounds; damping rescales `g'(0)` exactly (the derivative is linear in
/// `E`), so no extra operator applications are needed.
pub fn backtrack<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
    fx: &Mat<M::Field>,
    lfe: &Mat<M::Field>,
    e: &Direction<M::Field>,
    eta: f64,
    cfg: &BacktrackConfig,
) -> crate::Result<BacktrackOutcome<M::Field>> {
    cfg.validate()?;
    let fx_norm = frob_norm(fx);
    let g0 = fx_norm * fx_norm;
    let mut d = 2.0 * frob_inner_re(lfe, fx);
    let mut eta = eta;
    let mut theta_total = 1.0;
    let mut backtracks = 0usize;
    let mut ev = e.ev.clone();
    let mut elam = e.elam.clone();

    loop {
        let next = Iterate::new(&x.v + &ev, &x.lam + &elam)?;
        let next_cache = eval_cache(model, &next.v)?;
        let next_residual = residual(model, &next, &next_cache);
        let next_norm = frob_norm(&next_residual);
        let accepted = next_norm <= (1.0 - cfg.t * (1.0 - eta)) * fx_norm;
        if accepted || backtracks == cfg.max_backtracks {
            return Ok(BacktrackOutcome {
                next,
                next_residual,
                next_cache,
                next_norm,
                eta_effective: eta,
                theta_total,
                backtracks,
                accepted,
            });
        }
        let g1 = next_norm * next_norm;
        let denom = 2.0 * (g1 - g0 - d);
        let mut theta = if denom != 0.0 { -d / denom } else { cfg.theta_max };
        if !theta.is_finite() {
            theta = cfg.theta_max;
        }
        theta = theta.clamp(cfg.theta_min, cfg.theta_max);
        ev = ev.scale_re(theta);
        elam = elam.scale_re(theta);
        d *= theta;
        eta = 1.0 - theta * (1.0 - eta);
        theta_total *= theta;
        backtracks += 1;
    }
}

/// Which inner Krylov solver works on the update equation. Both minimize the
/// same residual over the same space (the vectorized route exists as an
/// independent cross-check).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerSolver {
    GlGmres,
    VecGmres,
}

/// Configuration for [`newton_solve`].
#[derive(Clone, Debug)]
pub struct NewtonConfig {
    /// Final tolerance on `||F(X)||_F`.
    pub tau: f64,
    /// Maximum number of Newton steps.
    pub max_newton: usize,
    /// SCF preprocessing; `None` starts directly from `V0` with a Rayleigh
    /// multiplier block.
    pub pre_scf: Option<ScfConfig>,
    /// Inner solver budget; its `rel_tol` is overwritten by the forcing term
    /// each iteration.
    pub glgmres: GlGmresConfig,
    pub forcing: ForcingConfig,
    pub backtrack: BacktrackConfig,
    pub inner: InnerSolver,
    /// Run the diagonalizing SCF postprocessing step at the end.
    pub postprocess: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tau: 1e-10,
            max_newton: 50,
            pre_scf: None,
            glgmres: GlGmresConfig::default(),
            forcing: ForcingConfig::default(),
            backtrack: BacktrackConfig::default(),
            inner: InnerSolver::GlGmres,
            postprocess: true,
        }
    }
}

impl NewtonConfig {
    fn validate(&self) -> crate::Result<()> {
        if !(self.tau > 0.0) {
            return Err(crate::Error::InvalidInput(format!(
                "Newton tolerance must be positive, got {}",
                self.tau
            )));
        }
        if self.max_newton == 0 {
            return Err(crate::Error::InvalidInput(
                "Newton needs at least one iteration".into(),
            ));
        }
        self.forcing.validate()?;
        self.backtrack.validate()
    }
}

/// Phase tag of a trace row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Scf,
    Newton,
    Post,
}

/// One row of the solver trace: an SCF step, a Newton step, or the
/// postprocessing step.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub phase: Phase,
    /// `||F(X)||_F` after this step.
    pub residual: f64,
    /// Forcing term requested from the inner solver (Newton rows).
    pub eta_requested: Option<f64>,
    /// Relative linear residual the inner solver actually achieved.
    pub eta_achieved: Option<f64>,
    /// Whether the inner solver met its target within its budget; when
    /// `false`, the best iterate found was used anyway.
    pub inner_converged: Option<bool>,
    /// Krylov (Arnoldi) steps spent by the inner solver.
    pub krylov_iters: Option<usize>,
    /// Total damping factor applied to the step.
    pub theta: Option<f64>,
    /// Number of damping passes.
    pub backtracks: Option<usize>,
    /// Wall-clock time of the step in milliseconds (zero without `std`).
    pub wall_ms: f64,
}

impl TraceRow {
    fn bare(phase: Phase, residual: f64, wall_ms: f64) -> Self {
        Self {
            phase,
            residual,
            eta_requested: None,
            eta_achieved: None,
            inner_converged: None,
            krylov_iters: None,
            theta: None,
            backtracks: None,
            wall_ms,
        }
    }
}

/// Full record of a [`newton_solve`] run.
#[derive(Clone, Debug, Default)]
pub struct NewtonTrace {
    pub rows: Vec<TraceRow>,
    /// Whether `||F|| <= tau` was reached within the Newton budget.
    pub converged: bool,
    /// Residual norm of the returned iterate (after postprocessing).
    pub final_residual: f64,
}

impl NewtonTrace {
    pub fn phase_rows(&self, phase: Phase) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.phase == phase)
    }

    pub fn newton_iterations(&self) -> usize {
        self.phase_rows(Phase::Newton).count()
    }

    pub fn scf_iterations(&self) -> usize {
        self.phase_rows(Phase::Scf).count()
    }

    /// Residual norms after each Newton step, in order.
    pub fn newton_residuals(&self) -> Vec<f64> {
        self.phase_rows(Phase::Newton).map(|r| r.residual).collect()
    }

    /// Mean Krylov steps per Newton step, if any Newton step ran.
    pub fn mean_krylov_per_newton_step(&self) -> Option<f64> {
        let mut steps = 0usize;
        let mut total = 0usize;
        for row in self.phase_rows(Phase::Newton) {
            steps += 1;
            total += row.krylov_iters.unwrap_or(0);
        }
        if steps == 0 {
            None
        } else {
            Some(total as f64 / steps as f64)
        }
    }
}

struct StepResult<T: Scalar> {
    outcome: BacktrackOutcome<T>,
    report: GlGmresReport,
    /// `||L_F(X, theta E) + F(X)||`: the linear-model residual of the damped
    /// step actually taken, used by the next forcing term.
    update_residual_norm: f64,
}

/// Runs the full solver: SCF preprocessing, the inexact Newton loop, and the
/// diagonalizing postprocessing step.
///
/// Non-convergence within `max_newton` is reported through the trace, not an
/// error; the best (final) iterate is still returned. Model evaluation
/// failures and invalid configurations propagate as errors.
pub fn newton_solve<M: NepvModel>(
    model: &M,
    v0: &Mat<M::Field>,
    cfg: &NewtonConfig,
) -> crate::Result<(Iterate<M::Field>, NewtonTrace)> {
    cfg.validate()?;
    let mut trace = NewtonTrace::default();

    // Phase 1: SCF preprocessing. Its last two residuals seed the forcing
    // term through the residual-ratio rule; with fewer than two steps the
    // configured fallback applies.
    let (mut x, mut cache, mut eta) = match &cfg.pre_scf {
        Some(scf_cfg) => {
            let (x0, scf_trace, cache0) = scf_solve_with_cache(model, v0, scf_cfg)?;
            for (i, r) in scf_trace.residuals.iter().enumerate() {
                trace
                    .rows
                    .push(TraceRow::bare(Phase::Scf, *r, scf_trace.wall_ms[i]));
            }
            let eta0 = match scf_trace.residuals.as_slice() {
                [.., prev, last] => forcing_choice2(*last, *prev, 0.0, &cfg.forcing),
                _ => cfg.forcing.eta0,
            };
            (x0, cache0, eta0)
        }
        None => {
            let mut gram = v0.conj_t_mul(v0);
            for i in 0..gram.rows() {
                gram[(i, i)] -= M::Field::one();
            }
            if frob_norm(&gram) > 1e-8 {
                return Err(crate::Error::InvalidInput(format!(
                    "starting block is not orthonormal: ||V0^H V0 - I||_F = {:.3e}",
                    frob_norm(&gram)
                )));
            }
            let cache0 = eval_cache(model, v0)?;
            let lam = rayleigh_lambda(model, v0, &cache0)?;
            (Iterate::new(v0.clone(), lam)?, cache0, cfg.forcing.eta0)
        }
    };
    eta = eta.max(ETA_FLOOR).min(cfg.forcing.eta_max);

    let mut fx = residual(model, &x, &cache);
    let mut fnorm = frob_norm(&fx);

    // Phase 2: the Newton loop.
    for _ in 0..cfg.max_newton {
        if fnorm <= cfg.tau {
            break;
        }
        let (step, ms) = crate::wall_clock_ms(|| -> crate::Result<StepResult<M::Field>> {
            let (e_stacked, report) = inner_solve(model, &x, &cache, &fx, eta, cfg)?;
            let e = Direction::from_stacked(&e_stacked);
            let lfe = apply_lf(model, &x, &e, &cache)?;
            let outcome = backtrack(model, &x, &fx, &lfe, &e, eta, &cfg.backtrack)?;
            // L_F is linear in E, so the damped step's linear-model residual
            // is exactly theta L_F(X, E) + F(X).
            let mut update_res = lfe.scale_re(outcome.theta_total);
            update_res.axpy(M::Field::one(), &fx);
            Ok(StepResult {
                outcome,
                report,
                update_residual_norm: frob_norm(&update_res),
            })
        });
        let StepResult {
            outcome,
            report,
            update_residual_norm,
        } = step?;

        // Residual-gap forcing rule for every step after the first; the
        // damped effective eta of the accepted step enters its safeguard.
        let eta_next = forcing_choice1(
            outcome.next_norm,
            fnorm,
            update_residual_norm,
            outcome.eta_effective,
            &cfg.forcing,
        );
        trace.rows.push(TraceRow {
            phase: Phase::Newton,
            residual: outcome.next_norm,
            eta_requested: Some(eta),
            eta_achieved: Some(report.achieved_rel_residual),
            inner_converged: Some(report.converged),
            krylov_iters: Some(report.iterations_total),
            theta: Some(outcome.theta_total),
            backtracks: Some(outcome.backtracks),
            wall_ms: ms,
        });
        x = outcome.next;
        fx = outcome.next_residual;
        cache = outcome.next_cache;
        fnorm = outcome.next_norm;
        eta = eta_next;
    }
    trace.converged = fnorm <= cfg.tau;
    trace.final_residual = fnorm;

    // Phase 3: diagonalizing postprocessing.
    if cfg.postprocess {
        let (post, ms) = crate::wall_clock_ms(|| -> crate::Result<_> {
            let xp = scf_postprocess(model, &x)?;
            let fresh = eval_cache(model, &xp.v)?;
            let rp = frob_norm(&residual(model, &xp, &fresh));
            Ok((xp, rp))
        });
        let (xp, rp) = post?;
        trace.rows.push(TraceRow::bare(Phase::Post, rp, ms));
        trace.final_residual = rp;
        x = xp;
    }

    Ok((x, trace))
}

/// One inexact solve of `L_F(X, E) = -F(X)` to relative tolerance `eta`,
/// through either the matrix-Krylov solver or the independent vectorized one.
fn inner_solve<M: NepvModel>(
    model: &M,
    x: &Iterate<M::Field>,
    cache: &EvalCache<M::Field>,
    fx: &Mat<M::Field>,
    eta: f64,
    cfg: &NewtonConfig,
) -> crate::Result<(Mat<M::Field>, GlGmresReport)> {
    let (n, k) = (x.n(), x.k());
    let mut inner_cfg = cfg.glgmres.clone();
    inner_cfg.rel_tol = eta;
    let b = fx.scale_re(-1.0);
    // The operator closure cannot return errors; park the first one here and
    // surface it afterwards (the zero output it leaves behind stops the
    // Krylov iteration almost immediately via breakdown).
    let err_slot: RefCell<Option<crate::Error>> = RefCell::new(None);

    let (e, report) = match cfg.inner {
        InnerSolver::GlGmres => {
            let apply = |em: &Mat<M::Field>| {
                match apply_lf(model, x, &Direction::from_stacked(em), cache) {
                    Ok(w) => w,
                    Err(err) => {
                        err_slot.borrow_mut().get_or_insert(err);
                        Mat::zeros(n + k, k)
                    }
                }
            };
            glgmres::solve_update(apply, &b, &Mat::zeros(n + k, k), &inner_cfg)
        }
        InnerSolver::VecGmres => {
            let bv = vectorize(&b);
            let zero = vec![M::Field::zero(); bv.len()];
            let apply = |ev: &[M::Field]| {
                let em = devectorize(ev, n + k, k).expect("fixed shape");
                match apply_lf(model, x, &Direction::from_stacked(&em), cache) {
                    Ok(w) => vectorize(&w),
                    Err(err) => {
                        err_slot.borrow_mut().get_or_insert(err);
                        vec![M::Field::zero(); (n + k) * k]
                    }
                }
            };
            let (xv, report) = vecgmres::solve(apply, &bv, &zero, &inner_cfg);
            (devectorize(&xv, n + k, k)?, report)
        }
    };
    if let Some(err) = err_slot.into_inner() {
        return Err(err);
    }
    Ok((e, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sym_eigs_k, SpectrumEnd};
    use crate::model::{residual_fresh, ConstantModel, DerivativeMode};

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
        fn apply_lh_to(&self, v: &Mat<f64>, ev: &Mat<f64>, w: &Mat<f64>) -> crate::Result<Mat<f64>> {
            // L_H(V, E) = 2 gamma Diag(sum_j V_ij E_ij); then apply to w.
            let n = self.n();
            let mut diag = alloc::vec![0.0; n];
            for j in 0..self.k {
                for i in 0..n {
                    diag[i] += 2.0 * self.gamma * v[(i, j)] * ev[(i, j)];
                }
            }
            let mut out = w.clone();
            for j in 0..out.cols() {
                for i in 0..n {
                    out[(i, j)] = diag[i] * w[(i, j)];
                }
            }
            Ok(out)
        }
    }

    const EW_ALPHA: f64 = 1.618033988749895;

    #[test]
    fn forcing_choice1_hand_values() {
        let cfg = ForcingConfig::default();
        // Perfect linear-model prediction: raw 0 -> floor, then safeguard.
        let eta = forcing_choice1(0.3, 1.0, 0.3, 0.5, &cfg);
        let safeguard = 0.5f64.powf(EW_ALPHA);
        assert!((eta - safeguard).abs() <= 1e-12);
        assert!(safeguard > 0.1);

        // Hand-evaluated mid-range case: raw 0.4 beats its safeguard 0.326.
        let eta = forcing_choice1(0.5, 1.0, 0.1, 0.5, &cfg);
        assert!((eta - 0.4).abs() <= 1e-12);

        // Oversized raw value is capped.
        let eta = forcing_choice1(2.0, 1.0, 0.5, 0.01, &cfg);
        assert!((eta - 0.9).abs() <= 1e-12);

        // Below the oversolve floor the safeguard must not engage.
        let eta = forcing_choice1(1.0, 1.0, 1.0 - 1e-4, 0.05, &cfg);
        assert!((eta - 1e-4).abs() <= 1e-10);
    }

    #[test]
    fn forcing_choice2_hand_values() {
        let cfg = ForcingConfig::default();
        // Stagnant residual: gamma * 1^alpha = 0.9 (already the cap).
        let eta = forcing_choice2(1.0, 1.0, 0.0, &cfg);
        assert!((eta - 0.9).abs() <= 1e-12);

        // Hand-evaluated: raw 0.9 * 0.1^1.618 ~ 0.0217, safeguard
        // 0.9 * 0.9^1.618 ~ 0.758 > 0.1 wins.
        let eta = forcing_choice2(0.1, 1.0, 0.9, &cfg);
        let expect = 0.9 * 0.9f64.powf(EW_ALPHA);
        assert!((eta - expect).abs() <= 1e-12);
        assert!((expect - 0.758).abs() < 2e-3);

        // Degenerate factor: exact solves requested (tiny floor).
        let mut zero_gamma = cfg;
        zero_gamma.gamma_ew = 0.0;
        let eta = forcing_choice2(0.5, 1.0, 0.9, &zero_gamma);
        assert_eq!(eta, ETA_FLOOR);
    }

    #[test]
    fn eta_floor_keeps_forcing_positive() {
        let cfg = ForcingConfig::default();
        let eta = forcing_choice1(0.5, 1.0, 0.5, 0.0, &cfg);
        assert!(eta >= ETA_FLOOR);
        assert!(eta <= cfg.eta_max);
    }

    /// Scalar diagnostic problem for the backtracking tests: A = diag(1,2,3),
    /// V = e1 fixed (E_V = 0), Lambda scalar. Along E = (0, e_lam) the
    /// residual is affine in theta, so g is exactly quadratic and the
    /// interpolated damping factor is the true minimizer.
    fn backtrack_setup(lam0: f64) -> (ConstantModel<f64>, Iterate<f64>, Mat<f64>) {
        let a = Mat::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        let model = ConstantModel::new(a, 1, SpectrumEnd::Smallest).unwrap();
        let v = Mat::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let lam = Mat::from_fn(1, 1, |_, _| lam0);
        let x = Iterate::new(v, lam).unwrap();
        let fx = {
            let cache = eval_cache(&model, &x.v).unwrap();
            residual(&model, &x, &cache)
        };
        (model, x, fx)
    }

    #[test]
    fn backtrack_accepts_a_sufficient_full_step_unchanged() {
        let (model, x, fx) = backtrack_setup(1.3);
        // Exact correction: Lambda 1.3 -> 1.0 solves the problem.
        let mut e = Direction::zeros(3, 1);
        e.elam[(0, 0)] = -0.3;
        let cache = eval_cache(&model, &x.v).unwrap();
        let lfe = apply_lf(&model, &x, &e, &cache).unwrap();
        let out = backtrack(&model, &x, &fx, &lfe, &e, 0.5, &BacktrackConfig::default()).unwrap();
        assert!(out.accepted);
        assert_eq!(out.backtracks, 0);
        assert_eq!(out.theta_total, 1.0);
        assert_eq!(out.eta_effective, 0.5);
        assert!(out.next_norm <= 1e-12);
        assert!((out.next.lam[(0, 0)] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn backtrack_interpolation_is_exact_on_affine_residual() {
        let (model, x, fx) = backtrack_setup(1.3);
        // Overshoot by 4x: F(theta) = (-0.3 + 1.2 theta) e1, so the exact
        // quadratic g is minimized at theta = 0.25, inside the clamp window.
        let mut e = Direction::zeros(3, 1);
        e.elam[(0, 0)] = -1.2;
        let cache = eval_cache(&model, &x.v).unwrap();
        let lfe = apply_lf(&model, &x, &e, &cache).unwrap();
        let out = backtrack(&model, &x, &fx, &lfe, &e, 0.5, &BacktrackConfig::default()).unwrap();
        assert!(out.accepted);
        assert_eq!(out.backtracks, 1);
        assert!((out.theta_total - 0.25).abs() <= 1e-12);
        assert!(out.next_norm <= 1e-12, "quadratic minimum is the exact solution");
        // Damped forcing: 1 - theta (1 - eta).
        assert!((out.eta_effective - (1.0 - 0.25 * 0.5)).abs() <= 1e-12);
    }

    #[test]
    fn backtrack_theta_formula_matches_hand_value() {
        // Spec'd arithmetic: g(0)=1, g(1)=4, g'(0)=-2 gives theta* = 0.2.
        let g0: f64 = 1.0;
        let g1: f64 = 4.0;
        let d: f64 = -2.0;
        let theta = -d / (2.0 * (g1 - g0 - d));
        assert!((theta - 0.2).abs() <= 1e-15);
    }

    #[test]
    fn backtrack_gives_up_after_max_and_reports_it() {
        let (model, x, fx) = backtrack_setup(1.3);
        // Ascent direction: residual grows along E, no theta can help.
        let mut e = Direction::zeros(3, 1);
        e.elam[(0, 0)] = 1.2;
        let cache = eval_cache(&model, &x.v).unwrap();
        let lfe = apply_lf(&model, &x, &e, &cache).unwrap();
        let cfg = BacktrackConfig::default();
        let out = backtrack(&model, &x, &fx, &lfe, &e, 0.5, &cfg).unwrap();
        assert!(!out.accepted);
        assert_eq!(out.backtracks, cfg.max_backtracks);
        // d > 0 makes every interpolated theta negative: clamped to 0.1 each
        // time, so the returned step is the 1e-4-scaled one.
        assert!((out.theta_total - 1e-4).abs() <= 1e-18);
        assert!(out.next_norm >= frob_norm(&fx));
    }

    #[test]
    fn constant_model_converges_in_few_steps_without_pre_scf() {
        let a = random_symmetric(14, 5);
        let model = ConstantModel::new(a.clone(), 3, SpectrumEnd::Smallest).unwrap();
        // Start near (but not at) the solution: perturb the eigenbasis.
        let exact = sym_eigs_k(&a, 3, SpectrumEnd::Smallest).unwrap();
        let mut next = xorshift(11);
        let mut v0 = exact.vectors.clone();
        for j in 0..3 {
            for i in 0..14 {
                v0[(i, j)] += 0.05 * next();
            }
        }
        let v0 = {
            // Re-orthonormalize the perturbed block.
            let mut v = v0;
            for j in 0..3 {
                for p in 0..j {
                    let mut dot = 0.0;
                    for i in 0..14 {
                        dot += v[(i, p)] * v[(i, j)];
                    }
                    for i in 0..14 {
                        let c = dot * v[(i, p)];
                        v[(i, j)] -= c;
                    }
                }
                let mut norm = 0.0;
                for i in 0..14 {
                    norm += v[(i, j)] * v[(i, j)];
                }
                let norm = norm.sqrt();
                for i in 0..14 {
                    v[(i, j)] /= norm;
                }
            }
            v
        };
        let cfg = NewtonConfig {
            tau: 1e-12,
            max_newton: 12,
            ..NewtonConfig::default()
        };
        let (x, trace) = newton_solve(&model, &v0, &cfg).unwrap();
        assert!(trace.converged, "trace: {trace:?}");
        assert!(trace.final_residual <= 1e-10);
        assert!(trace.newton_iterations() <= 12);

        // Postprocessing contract: diagonal multiplier block, orthonormal V.
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(x.lam[(i, j)].abs() <= 1e-10);
                }
            }
        }
        let mut gram = x.v.conj_t_mul(&x.v);
        for i in 0..3 {
            gram[(i, i)] -= 1.0;
        }
        assert!(frob_norm(&gram) <= 10.0 * cfg.tau);
        // Recovered eigenvalues match the direct eigensolve.
        for j in 0..3 {
            assert!((x.lam[(j, j)] - exact.values[j]).abs() <= 1e-8);
        }
    }

    #[test]
    fn nonlinear_model_converges_with_pre_scf_and_obeys_trace_invariants() {
        let a = random_symmetric(16, 41);
        let model = DensityModel {
            a,
            gamma: 0.4,
            k: 2,
        };
        let v0 = random_orthonormal(16, 2, 9);
        let cfg = NewtonConfig {
            tau: 1e-12,
            max_newton: 20,
            pre_scf: Some(ScfConfig {
                tol: 1e-13,
                max_iter: 2,
                which: None,
            }),
            ..NewtonConfig::default()
        };
        let (x, trace) = newton_solve(&model, &v0, &cfg).unwrap();
        assert!(trace.converged, "residuals: {:?}", trace.newton_residuals());
        assert_eq!(trace.scf_iterations(), 2);
        assert!(trace.newton_iterations() <= 15);

        for row in &trace.rows {
            assert!(row.residual >= 0.0);
            if row.phase == Phase::Newton {
                let eta = row.eta_requested.unwrap();
                assert!(eta > 0.0 && eta <= 0.9, "eta out of range: {eta}");
                assert!(row.krylov_iters.unwrap() >= 1);
                let theta = row.theta.unwrap();
                assert!(theta > 0.0 && theta <= 1.0);
            }
        }

        // First Newton row's requested forcing comes from the last two SCF
        // residuals through the residual-ratio rule.
        let scf_res: Vec<f64> = trace.phase_rows(Phase::Scf).map(|r| r.residual).collect();
        let expected_eta0 =
            forcing_choice2(scf_res[1], scf_res[0], 0.0, &cfg.forcing);
        let first_newton = trace.phase_rows(Phase::Newton).next().unwrap();
        assert!((first_newton.eta_requested.unwrap() - expected_eta0).abs() <= 1e-15);

        // Solution quality: residual at tolerance, eigenvalues consistent
        // with a direct eigensolve of H(V*).
        let (r, cache) = residual_fresh(&model, &x).unwrap();
        assert!(frob_norm(&r) <= 10.0 * cfg.tau);
        let pairs = sym_eigs_k(&cache.h, 2, SpectrumEnd::Smallest).unwrap();
        for j in 0..2 {
            assert!((x.lam[(j, j)] - pairs.values[j]).abs() <= 1e-8);
        }
    }

    #[test]
    fn vectorized_inner_solver_reaches_the_same_solution() {
        let a = random_symmetric(12, 33);
        let model = DensityModel {
            a,
            gamma: 0.3,
            k: 2,
        };
        let v0 = random_orthonormal(12, 2, 14);
        let base = NewtonConfig {
            tau: 1e-12,
            max_newton: 25,
            pre_scf: Some(ScfConfig {
                tol: 1e-13,
                max_iter: 2,
                which: None,
            }),
            ..NewtonConfig::default()
        };
        let mut vec_cfg = base.clone();
        vec_cfg.inner = InnerSolver::VecGmres;

        let (xg, tg) = newton_solve(&model, &v0, &base).unwrap();
        let (xv, tv) = newton_solve(&model, &v0, &vec_cfg).unwrap();
        assert!(tg.converged && tv.converged);
        // Same eigenvalues; the iterates themselves agree to solver accuracy.
        for j in 0..2 {
            assert!((xg.lam[(j, j)] - xv.lam[(j, j)]).abs() <= 1e-9);
        }
        assert_eq!(tg.newton_iterations(), tv.newton_iterations());
    }

    /// Laplacian-potential model `H(V) = L + gamma Diag(L^{-1} rho(V))` on a
    /// 1-d grid: the representative structured nonlinearity for tail checks.
    struct LaplacianDensity {
        l: crate::linalg::SymTridiag,
        dense_l: Mat<f64>,
        gamma: f64,
        k: usize,
    }

    impl LaplacianDensity {
        fn new(n: usize, k: usize, gamma: f64) -> Self {
            use crate::linalg::SymOperator;
            let l = crate::linalg::SymTridiag::laplacian_1d(n);
            let dense_l = l.to_dense();
            Self { l, dense_l, gamma, k }
        }
    }

    impl NepvModel for LaplacianDensity {
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
            use crate::linalg::SymOperator;
            let n = self.n();
            let mut rho = alloc::vec![0.0; n];
            for j in 0..self.k {
                for i in 0..n {
                    rho[i] += v[(i, j)] * v[(i, j)];
                }
            }
            let pot = self.l.solve(&rho)?;
            let mut h = self.dense_l.clone();
            for i in 0..n {
                h[(i, i)] += self.gamma * pot[i];
            }
            Ok(h)
        }
        fn apply_lh_to(
            &self,
            v: &Mat<f64>,
            ev: &Mat<f64>,
            w: &Mat<f64>,
        ) -> crate::Result<Mat<f64>> {
            use crate::linalg::SymOperator;
            let n = self.n();
            let mut s = alloc::vec![0.0; n];
            for j in 0..self.k {
                for i in 0..n {
                    s[i] += v[(i, j)] * ev[(i, j)];
                }
            }
            let pot = self.l.solve(&s)?;
            let mut out = w.clone();
            for j in 0..out.cols() {
                for i in 0..n {
                    out[(i, j)] = 2.0 * self.gamma * pot[i] * w[(i, j)];
                }
            }
            Ok(out)
        }
    }

    #[test]
    fn superlinear_tail_on_a_laplacian_density_model() {
        let model = LaplacianDensity::new(10, 2, 0.5);
        let v0 = Mat::from_fn(10, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let cfg = NewtonConfig {
            tau: 1e-12,
            max_newton: 25,
            pre_scf: Some(ScfConfig {
                tol: 1e-13,
                max_iter: 2,
                which: None,
            }),
            ..NewtonConfig::default()
        };
        let (_, trace) = newton_solve(&model, &v0, &cfg).unwrap();
        assert!(trace.converged);
        let res = trace.newton_residuals();
        // Conservative superlinear signature: the final three residuals obey
        // r_{j+1} <= 10 r_j^{3/2}.
        assert!(res.len() >= 3, "need a visible tail, got {res:?}");
        let tail = &res[res.len() - 3..];
        for w in tail.windows(2) {
            assert!(
                w[1] <= 10.0 * w[0].powf(1.5),
                "tail not superlinear: {res:?}"
            );
        }
    }

    #[test]
    fn exhausted_inner_budget_is_reported_and_survived() {
        let a = random_symmetric(16, 55);
        let model = DensityModel {
            a,
            gamma: 0.4,
            k: 2,
        };
        let v0 = random_orthonormal(16, 2, 21);
        let mut cfg = NewtonConfig {
            tau: 1e-12,
            max_newton: 8,
            pre_scf: Some(ScfConfig {
                tol: 1e-13,
                max_iter: 2,
                which: None,
            }),
            ..NewtonConfig::default()
        };
        cfg.glgmres.max_krylov = 2; // far too small to meet any forcing term
        let (_, trace) = newton_solve(&model, &v0, &cfg).unwrap();
        let mut saw_unconverged_inner = false;
        for row in trace.phase_rows(Phase::Newton) {
            if row.inner_converged == Some(false) {
                saw_unconverged_inner = true;
                assert!(row.eta_achieved.unwrap() > row.eta_requested.unwrap());
            }
        }
        assert!(saw_unconverged_inner, "budget of 2 must fall short somewhere");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let a = random_symmetric(6, 2);
        let model = ConstantModel::new(a, 1, SpectrumEnd::Smallest).unwrap();
        let v0 = random_orthonormal(6, 1, 4);
        let bad_tau = NewtonConfig {
            tau: 0.0,
            ..NewtonConfig::default()
        };
        assert!(newton_solve(&model, &v0, &bad_tau).is_err());
        let mut bad_forcing = NewtonConfig::default();
        bad_forcing.forcing.eta_max = 1.5;
        assert!(newton_solve(&model, &v0, &bad_forcing).is_err());
        let mut bad_bt = NewtonConfig::default();
        bad_bt.backtrack.theta_min = 0.7;
        assert!(newton_solve(&model, &v0, &bad_bt).is_err());
        // Non-orthonormal start without preprocessing is rejected too.
        let mut skewed = random_orthonormal(6, 1, 4);
        skewed[(0, 0)] += 0.3;
        assert!(newton_solve(&model, &skewed, &NewtonConfig::default()).is_err());
    }
}
