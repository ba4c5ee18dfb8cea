//! Standard vector GMRES, written independently of the matrix-Krylov kernel.
//!
//! This is the classical algorithm on plain vectors: Arnoldi with modified
//! Gram-Schmidt, incremental Givens reduction, restart, and an explicit true-
//! residual check before accepting. It exists as a genuinely separate code
//! path so the equivalence between the global (matrix) Krylov solver and
//! ordinary GMRES on the vectorized update equation can be tested as a
//! dual-route oracle, and it backs the `newton-vecgmres` solver variant,
//! which runs the Newton update equation in vectorized form.
//!
//! Like the matrix kernel, complex problems are treated with real
//! coefficients and the inner product `Re <x, y>` (the realified Euclidean
//! product), so both routes build the same realified Krylov spaces.

use alloc::vec;
use alloc::vec::Vec;

use crate::glgmres::{GlGmresConfig, GlGmresReport};
use crate::mat::{Mat, Scalar};
#[allow(unused_imports)]
use num_traits::Float;

fn dot_re<T: Scalar>(x: &[T], y: &[T]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        acc += a.re() * b.re() + a.im() * b.im();
    }
    acc
}

fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|a| a.abs_sq()).sum::<f64>().sqrt()
}

fn axpy_re<T: Scalar>(y: &mut [T], alpha: f64, x: &[T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi.scale(alpha);
    }
}

/// First-cycle record: iterate after each Arnoldi step plus the Hessenberg.
pub struct VecCycleHistory<T> {
    pub iterates: Vec<Vec<T>>,
    pub hessenberg: Mat<f64>,
}

/// GMRES on `apply(x) = b` with the same configuration and reporting types as
/// the matrix kernel.
pub fn solve<T: Scalar>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    x0: &[T],
    cfg: &GlGmresConfig,
) -> (Vec<T>, GlGmresReport) {
    let (x, report, _) = solve_impl(apply, b, x0, cfg, false);
    (x, report)
}

/// As [`solve`], recording the first cycle for equivalence tests.
pub fn solve_with_history<T: Scalar>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    x0: &[T],
    cfg: &GlGmresConfig,
) -> (Vec<T>, GlGmresReport, VecCycleHistory<T>) {
    let (x, report, hist) = solve_impl(apply, b, x0, cfg, true);
    (x, report, hist.expect("history requested"))
}

struct Reduced {
    tri: Vec<Vec<f64>>,
    givens: Vec<(f64, f64)>,
    g: Vec<f64>,
}

impl Reduced {
    fn new(beta: f64) -> Self {
        Reduced {
            tri: Vec::new(),
            givens: Vec::new(),
            g: vec![beta],
        }
    }

    fn push(&mut self, mut col: Vec<f64>) {
        let l = self.tri.len();
        for (i, &(c, s)) in self.givens.iter().enumerate() {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = -s * a + c * b;
        }
        let (a, b) = (col[l], col[l + 1]);
        let r = a.hypot(b);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
        col[l] = r;
        col.truncate(l + 1);
        self.tri.push(col);
        self.givens.push((c, s));
        let gl = self.g[l];
        self.g[l] = c * gl;
        self.g.push(-s * gl);
    }

    fn estimate(&self) -> f64 {
        self.g[self.tri.len()].abs()
    }

    fn coefficients(&self) -> Vec<f64> {
        let l = self.tri.len();
        let mut c = vec![0.0; l];
        for j in (0..l).rev() {
            let mut acc = self.g[j];
            for j2 in j + 1..l {
                acc -= self.tri[j2][j] * c[j2];
            }
            c[j] = if self.tri[j][j] == 0.0 {
                0.0
            } else {
                acc / self.tri[j][j]
            };
        }
        c
    }
}

fn assemble<T: Scalar>(x_base: &[T], basis: &[Vec<T>], coeffs: &[f64]) -> Vec<T> {
    let mut x = x_base.to_vec();
    for (ci, v) in coeffs.iter().zip(basis) {
        axpy_re(&mut x, *ci, v);
    }
    x
}

fn residual<T: Scalar>(apply: &impl Fn(&[T]) -> Vec<T>, b: &[T], x: &[T]) -> Vec<T> {
    let ax = apply(x);
    debug_assert_eq!(ax.len(), b.len());
    let mut r = b.to_vec();
    for (ri, ai) in r.iter_mut().zip(&ax) {
        *ri -= *ai;
    }
    r
}

fn solve_impl<T: Scalar>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    x0: &[T],
    cfg: &GlGmresConfig,
    want_history: bool,
) -> (Vec<T>, GlGmresReport, Option<VecCycleHistory<T>>) {
    assert!(cfg.max_krylov >= 1);
    assert!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0);
    assert_eq!(b.len(), x0.len());

    let bnorm = norm2(b);
    let mut report = GlGmresReport::default();
    let mut history = want_history.then(|| VecCycleHistory {
        iterates: Vec::new(),
        hessenberg: Mat::zeros(1, 0),
    });
    if bnorm == 0.0 {
        report.converged = true;
        return (x0.to_vec(), report, history);
    }
    let target = cfg.rel_tol * bnorm;

    let mut x = x0.to_vec();
    let mut best_x = x.clone();
    let mut best_res = norm2(&residual(&apply, b, &x));

    for cycle in 0..=cfg.max_restarts {
        let r0 = residual(&apply, b, &x);
        let beta = norm2(&r0);
        if beta <= target {
            report.achieved_rel_residual = beta / bnorm;
            report.converged = true;
            return (x, report, history);
        }
        let mut basis: Vec<Vec<T>> = vec![r0.iter().map(|v| v.scale(1.0 / beta)).collect()];
        let mut hess_cols: Vec<Vec<f64>> = Vec::new();
        let mut red = Reduced::new(beta);
        let mut cycle_done = false;

        while hess_cols.len() < cfg.max_krylov && !cycle_done {
            let mut w = apply(basis.last().expect("nonempty basis"));
            let l = basis.len();
            let mut h = vec![0.0; l + 1];
            for (i, v) in basis.iter().enumerate() {
                let hi = dot_re(v, &w);
                axpy_re(&mut w, -hi, v);
                h[i] = hi;
            }
            let w_norm = norm2(&w);
            h[l] = w_norm;
            let breakdown = w_norm <= crate::glgmres::BREAKDOWN_EPS;
            hess_cols.push(h.clone());
            red.push(h);
            report.iterations_total += 1;
            if !breakdown {
                basis.push(w.iter().map(|v| v.scale(1.0 / w_norm)).collect());
            }

            if let Some(hist) = history.as_mut() {
                if cycle == 0 {
                    hist.iterates.push(assemble(&x, &basis, &red.coefficients()));
                }
            }

            if red.estimate() <= target || breakdown {
                let cand = assemble(&x, &basis, &red.coefficients());
                let true_res = norm2(&residual(&apply, b, &cand));
                if true_res < best_res {
                    best_res = true_res;
                    best_x = cand.clone();
                }
                if true_res <= target {
                    if let Some(hist) = history.as_mut() {
                        if cycle == 0 {
                            hist.hessenberg = dense_hessenberg(&hess_cols);
                        }
                    }
                    report.achieved_rel_residual = true_res / bnorm;
                    report.converged = true;
                    return (cand, report, history);
                }
                if breakdown {
                    x = cand;
                    cycle_done = true;
                }
            }
        }

        if !cycle_done {
            let cand = assemble(&x, &basis, &red.coefficients());
            let true_res = norm2(&residual(&apply, b, &cand));
            if true_res < best_res {
                best_res = true_res;
                best_x = cand.clone();
            }
            x = cand;
        }
        if let Some(hist) = history.as_mut() {
            if cycle == 0 {
                hist.hessenberg = dense_hessenberg(&hess_cols);
            }
        }
        report.restarts = cycle;
        if best_res <= target {
            report.achieved_rel_residual = best_res / bnorm;
            report.converged = true;
            return (best_x, report, history);
        }
    }

    report.achieved_rel_residual = best_res / bnorm;
    report.converged = best_res <= target;
    (best_x, report, history)
}

fn dense_hessenberg(cols: &[Vec<f64>]) -> Mat<f64> {
    let l = cols.len();
    let mut h = Mat::zeros(l + 1, l);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            h[(i, j)] = v;
        }
    }
    h
}
