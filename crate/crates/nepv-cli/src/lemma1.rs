//! Cross-check that the matrix-space Krylov solver and plain vector GMRES on
//! the explicitly assembled update operator produce the same iterates.
//!
//! The update equation `L_F(X, E) = -F(X)` can be solved either directly in
//! matrix space or, after vectorization, as an ordinary linear system with
//! the Kronecker-form matrix of `L_F(X, .)`. Both minimize the same residual
//! over the same subspace, so iterate `m` of one run must equal iterate `m`
//! of the other to rounding accuracy — a strong end-to-end oracle for the
//! Arnoldi process, the least-squares solve, and the operator evaluation.

use nepv_core::glgmres::{self, GlGmresConfig, Ortho};
use nepv_core::mat::{devectorize, frob_norm, vectorize, Mat, Scalar};
use nepv_core::model::{
    apply_lf, build_kronecker_form, eval_cache, rayleigh_lambda, residual, Direction, Iterate,
    NepvModel,
};
use nepv_core::problems::gpe::{GpeGrid, GpeOperators};
use nepv_core::problems::ks::KsSimpleModel;
use nepv_core::vecgmres;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct Lemma1Args {
    /// `ks-simple` or `gpe-real` (families whose update operator is linear
    /// over the reals, so the Kronecker form exists).
    pub problem: String,
    pub n: usize,
    pub k: usize,
    pub m_max: usize,
    pub tol: f64,
    pub gamma: f64,
    pub omega: f64,
}

#[derive(Clone, Debug)]
pub struct Lemma1Row {
    pub m: usize,
    /// `||Y_m - devec(y_m)||_F / ||devec(y_m)||_F`.
    pub iterate_rel_diff: f64,
    /// Max entrywise difference of the two Hessenberg matrices up to step m.
    pub hessenberg_diff: f64,
}

#[derive(Clone, Debug)]
pub struct Lemma1Report {
    pub rows: Vec<Lemma1Row>,
    pub pass: bool,
    pub tol: f64,
}

impl Lemma1Report {
    pub fn max_iterate_diff(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iterate_rel_diff)
            .fold(0.0, f64::max)
    }

    pub fn max_hessenberg_diff(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.hessenberg_diff)
            .fold(0.0, f64::max)
    }
}

pub fn lemma1_check(args: &Lemma1Args) -> CliResult<Lemma1Report> {
    match args.problem.as_str() {
        "ks-simple" => {
            let model = KsSimpleModel::new(args.n, args.k, args.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let v0 = generic_orthonormal(args.n, args.k, START_SEED);
            check_model(&model, &v0, args)
        }
        "gpe-real" => {
            if args.k != 1 {
                return Err(CliError::Config(format!(
                    "gpe-real computes a single eigenpair; --k must be 1, got {}",
                    args.k
                )));
            }
            let grid = GpeGrid::new(1.0, args.n, args.omega)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let ops = GpeOperators::harmonic(grid);
            let model = ops
                .real_model(args.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let v0 = generic_orthonormal(2 * args.n * args.n, 1, START_SEED);
            check_model(&model, &v0, args)
        }
        other => Err(CliError::Config(format!(
            "lemma1-check supports ks-simple and gpe-real, got `{other}`"
        ))),
    }
}

/// Fixed seed so repeated checks see the identical starting block.
const START_SEED: u64 = 0x5EED;

/// Deterministic orthonormal block in general position. The equivalence
/// being checked holds at any point, but a highly symmetric point can
/// confine the Krylov space to a small invariant subspace; at the ensuing
/// near-breakdown the next basis matrix is normalized rounding noise, so
/// later Hessenberg columns stop being comparable (the iterates, being
/// basis-independent minimizers, still agree). A generic point keeps every
/// compared column numerically well-defined.
fn generic_orthonormal(n: usize, k: usize, seed: u64) -> Mat<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v = Mat::from_fn(n, k, |_, _| next());
    // Modified Gram-Schmidt across the columns.
    for j in 0..k {
        for i in 0..j {
            let mut dot = 0.0;
            for r in 0..n {
                dot += v[(r, i)] * v[(r, j)];
            }
            for r in 0..n {
                let d = dot * v[(r, i)];
                v[(r, j)] -= d;
            }
        }
        let mut nrm = 0.0;
        for r in 0..n {
            nrm += v[(r, j)] * v[(r, j)];
        }
        let nrm = nrm.sqrt();
        for r in 0..n {
            v[(r, j)] /= nrm;
        }
    }
    v
}

fn check_model<M: NepvModel>(
    model: &M,
    v0: &Mat<M::Field>,
    args: &Lemma1Args,
) -> CliResult<Lemma1Report> {
    let cache = eval_cache(model, v0).map_err(|e| CliError::Config(e.to_string()))?;
    let lam = rayleigh_lambda(model, v0, &cache).map_err(|e| CliError::Config(e.to_string()))?;
    let x = Iterate::new(v0.clone(), lam).map_err(|e| CliError::Config(e.to_string()))?;
    let b = residual(model, &x, &cache).scale_re(-1.0);
    let (n, k) = (x.n(), x.k());

    // Never stop on the residual target: the point is to watch every step.
    let cfg = GlGmresConfig {
        max_krylov: args.m_max,
        max_restarts: 0,
        ortho: Ortho::Mgs,
        rel_tol: 1e-300,
    };

    let apply_matrix = |e: &Mat<M::Field>| {
        apply_lf(model, &x, &Direction::from_stacked(e), &cache)
            .expect("update operator evaluation failed mid-check")
    };
    let zero = Mat::zeros(n + k, k);
    let (_, _, gl) = glgmres::solve_update_with_history(apply_matrix, &b, &zero, &cfg);

    let kf = build_kronecker_form(model, &x).map_err(|e| CliError::Config(e.to_string()))?;
    let dim = (n + k) * k;
    let apply_vector = |xv: &[M::Field]| {
        let mut y = vec![M::Field::zero(); dim];
        for (j, &xj) in xv.iter().enumerate() {
            if xj == M::Field::zero() {
                continue;
            }
            for i in 0..dim {
                y[i] += kf[(i, j)] * xj;
            }
        }
        y
    };
    let bv = vectorize(&b);
    let zv = vec![M::Field::zero(); dim];
    let (_, _, vg) = vecgmres::solve_with_history(apply_vector, &bv, &zv, &cfg);

    if gl.iterates.len() != vg.iterates.len() {
        return Err(CliError::NonConvergence(format!(
            "step counts diverged: matrix route took {}, vector route {}",
            gl.iterates.len(),
            vg.iterates.len()
        )));
    }

    let mut rows = Vec::new();
    for (idx, (ym, yv)) in gl.iterates.iter().zip(&vg.iterates).enumerate() {
        let m = idx + 1;
        let yv = devectorize(yv, n + k, k).map_err(|e| CliError::Config(e.to_string()))?;
        let diff = ym - &yv;
        let scale = frob_norm(&yv).max(f64::MIN_POSITIVE);
        let iterate_rel_diff = frob_norm(&diff) / scale;
        let hessenberg_diff = hessenberg_entry_diff(&gl.hessenberg, &vg.hessenberg, m);
        rows.push(Lemma1Row {
            m,
            iterate_rel_diff,
            hessenberg_diff,
        });
    }

    let pass = !rows.is_empty()
        && rows
            .iter()
            .all(|r| r.iterate_rel_diff <= args.tol && r.hessenberg_diff <= args.tol);
    Ok(Lemma1Report {
        rows,
        pass,
        tol: args.tol,
    })
}

/// Max entrywise difference over the leading `(m+1) x m` Hessenberg block.
fn hessenberg_entry_diff(a: &Mat<f64>, b: &Mat<f64>, m: usize) -> f64 {
    let rows = (m + 1).min(a.rows()).min(b.rows());
    let cols = m.min(a.cols()).min(b.cols());
    let mut max = 0.0f64;
    for j in 0..cols {
        for i in 0..rows {
            max = max.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    max
}

pub fn lemma1_csv(report: &Lemma1Report) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "{}", crate::output::LEMMA1_HEADER);
    let _ = writeln!(out, "m,iterate_rel_diff,hessenberg_diff");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.m,
            crate::output::sci(r.iterate_rel_diff),
            crate::output::sci(r.hessenberg_diff)
        );
    }
    out
}
