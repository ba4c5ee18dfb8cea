//! Dispatches one experiment configuration to the matching model and solver
//! and flattens the solver trace into output-ready rows.

use std::time::Instant;

use nepv_core::mat::{Mat, Scalar};
use nepv_core::model::NepvModel;
use nepv_core::newton::{newton_solve, NewtonTrace, Phase};
use nepv_core::problems::gpe::{complex_to_doubled, GpeGrid, GpeOperators};
use nepv_core::problems::ks::{Ks3dModel, KsSimpleModel};
use nepv_core::problems::rlda::{rlda_pipeline, RldaPipelineConfig, RldaSummary};
use nepv_core::scf::{scf_solve, ScfTrace};

use crate::config::{ExperimentConfig, ProblemId, SolverId};
use crate::dataset;
use crate::error::{CliError, CliResult};

/// One output trace row; `None` fields print as empty CSV cells.
#[derive(Clone, Debug)]
pub struct TraceRowOut {
    pub phase: &'static str,
    pub residual: f64,
    pub eta: Option<f64>,
    pub krylov: Option<usize>,
    pub theta: Option<f64>,
    pub backtracks: Option<usize>,
    pub wall_ms: f64,
}

/// Aggregates of a robust-discriminant pipeline run.
#[derive(Clone, Debug)]
pub struct RldaAggregates {
    pub newton_tsa_mean: f64,
    pub clda_tsa_mean: f64,
    pub summary: RldaSummary,
}

/// Everything one run produces, ready for the CSV writers.
#[derive(Debug)]
pub struct RunResult {
    pub run_id: String,
    pub problem: &'static str,
    pub solver: &'static str,
    pub converged: bool,
    pub final_residual: f64,
    pub scf_iterations: usize,
    pub newton_iterations: usize,
    pub mean_krylov: Option<f64>,
    pub total_inner: usize,
    /// Diagonal of the converged multiplier block (real parts).
    pub eigenvalues: Vec<f64>,
    pub rows: Vec<TraceRowOut>,
    pub total_wall_ms: f64,
    pub rlda: Option<RldaAggregates>,
}

fn rows_from_scf(trace: &ScfTrace) -> Vec<TraceRowOut> {
    trace
        .residuals
        .iter()
        .zip(&trace.wall_ms)
        .map(|(&residual, &wall_ms)| TraceRowOut {
            phase: "scf",
            residual,
            eta: None,
            krylov: None,
            theta: None,
            backtracks: None,
            wall_ms,
        })
        .collect()
}

fn rows_from_newton(trace: &NewtonTrace) -> Vec<TraceRowOut> {
    trace
        .rows
        .iter()
        .map(|r| TraceRowOut {
            phase: match r.phase {
                Phase::Scf => "scf",
                Phase::Newton => "newton",
                Phase::Post => "post",
            },
            residual: r.residual,
            eta: r.eta_requested,
            krylov: r.krylov_iters,
            theta: r.theta,
            backtracks: r.backtracks,
            wall_ms: r.wall_ms,
        })
        .collect()
}

/// Runs a model through the configured solver. The returned result still has
/// an empty `run_id`; the caller stamps identity and total wall time.
fn run_model<M: NepvModel>(
    model: &M,
    v0: &Mat<M::Field>,
    cfg: &ExperimentConfig,
) -> CliResult<RunResult> {
    let blank = |converged, final_residual| RunResult {
        run_id: String::new(),
        problem: cfg.problem.as_str(),
        solver: cfg.solver.as_str(),
        converged,
        final_residual,
        scf_iterations: 0,
        newton_iterations: 0,
        mean_krylov: None,
        total_inner: 0,
        eigenvalues: Vec::new(),
        rows: Vec::new(),
        total_wall_ms: 0.0,
        rlda: None,
    };
    match cfg.solver {
        SolverId::Scf => {
            let (x, trace) = scf_solve(model, v0, &cfg.scf_config())
                .map_err(|e| CliError::NonConvergence(format!("scf failed: {e}")))?;
            let mut out = blank(trace.converged, trace.final_residual().unwrap_or(f64::NAN));
            out.scf_iterations = trace.iterations();
            out.eigenvalues = (0..x.k()).map(|j| x.lam[(j, j)].re()).collect();
            out.rows = rows_from_scf(&trace);
            Ok(out)
        }
        SolverId::NewtonGlGmres | SolverId::NewtonVecGmres => {
            let (x, trace) = newton_solve(model, v0, &cfg.newton_config())
                .map_err(|e| CliError::NonConvergence(format!("newton failed: {e}")))?;
            let mut out = blank(trace.converged, trace.final_residual);
            out.scf_iterations = trace.scf_iterations();
            out.newton_iterations = trace.newton_iterations();
            out.mean_krylov = trace.mean_krylov_per_newton_step();
            out.total_inner = trace
                .phase_rows(Phase::Newton)
                .filter_map(|r| r.krylov_iters)
                .sum();
            out.eigenvalues = (0..x.k()).map(|j| x.lam[(j, j)].re()).collect();
            out.rows = rows_from_newton(&trace);
            Ok(out)
        }
    }
}

fn run_rlda(cfg: &ExperimentConfig) -> CliResult<RunResult> {
    let path = cfg.dataset.as_ref().expect("validated by config");
    let data = dataset::load_two_class(path)?;
    let pipeline = RldaPipelineConfig {
        alpha_split: cfg.alpha_split,
        trials: cfg.trials,
        resamples: cfg.resamples,
        seed: cfg.seed,
        newton: cfg.newton_config(),
    };
    let summary = rlda_pipeline(&data, &pipeline)
        .map_err(|e| CliError::NonConvergence(format!("rlda pipeline failed: {e}")))?;

    let converged = summary.all_converged();
    let final_residual = summary
        .trials
        .iter()
        .map(|t| t.final_residual)
        .fold(0.0, f64::max);
    let rows = summary
        .trials
        .iter()
        .map(|t| TraceRowOut {
            phase: "newton",
            residual: t.final_residual,
            eta: None,
            krylov: Some(t.max_krylov_per_step),
            theta: None,
            backtracks: None,
            wall_ms: t.wall_ms,
        })
        .collect();
    Ok(RunResult {
        run_id: String::new(),
        problem: cfg.problem.as_str(),
        solver: cfg.solver.as_str(),
        converged,
        final_residual,
        scf_iterations: 0,
        newton_iterations: summary
            .trials
            .iter()
            .map(|t| t.newton_iterations)
            .max()
            .unwrap_or(0),
        mean_krylov: None,
        total_inner: 0,
        eigenvalues: Vec::new(),
        rows,
        total_wall_ms: 0.0,
        rlda: Some(RldaAggregates {
            newton_tsa_mean: summary.newton_tsa_mean(),
            clda_tsa_mean: summary.clda_tsa_mean(),
            summary,
        }),
    })
}

/// Runs one experiment end to end (no file output).
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<RunResult> {
    let started = Instant::now();
    let mut result = match cfg.problem {
        ProblemId::KsSimple => {
            let n = cfg.n.expect("validated");
            let model = KsSimpleModel::new(n, cfg.k, cfg.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            run_model(&model, &model.identity_start(), cfg)?
        }
        ProblemId::Ks3d => {
            let m = cfg.m.expect("validated");
            let model = Ks3dModel::new(m, cfg.k, cfg.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            run_model(&model, &model.identity_start(), cfg)?
        }
        ProblemId::Gpe => {
            let ops = gpe_operators(cfg)?;
            let model = ops
                .complex_model(cfg.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            run_model(&model, &ops.unit_start(), cfg)?
        }
        ProblemId::GpeReal => {
            let ops = gpe_operators(cfg)?;
            let model = ops
                .real_model(cfg.gamma)
                .map_err(|e| CliError::Config(e.to_string()))?;
            run_model(&model, &complex_to_doubled(&ops.unit_start()), cfg)?
        }
        ProblemId::Rlda => run_rlda(cfg)?,
    };
    result.run_id = cfg.run_id.clone();
    result.total_wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

fn gpe_operators(cfg: &ExperimentConfig) -> CliResult<GpeOperators> {
    let n_side = cfg.n.expect("validated");
    let grid =
        GpeGrid::new(cfg.ell, n_side, cfg.omega).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(GpeOperators::harmonic(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;
    use std::path::Path;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_raw(RawConfig::parse(text, Path::new("t.cfg")).unwrap()).unwrap()
    }

    #[test]
    fn newton_run_produces_trace_and_eigenvalues() {
        let cfg = cfg("problem = ks-simple\nn = 10\nk = 2\ngamma = 0.6\ntau = 1e-12\n");
        let run = run_experiment(&cfg).unwrap();
        assert!(run.converged);
        assert!(run.final_residual <= 1e-12);
        assert_eq!(run.scf_iterations, 2);
        assert!(run.newton_iterations >= 1);
        assert_eq!(run.eigenvalues.len(), 2);
        assert!(run.eigenvalues[0] < run.eigenvalues[1]);
        assert!(run.rows.iter().any(|r| r.phase == "newton"));
        assert!(run.rows.iter().any(|r| r.phase == "post"));
        assert!(run.mean_krylov.unwrap() > 0.0);
        assert_eq!(
            run.total_inner,
            run.rows.iter().filter_map(|r| r.krylov).sum::<usize>()
        );
    }

    #[test]
    fn scf_run_reports_nonconvergence_without_error() {
        let cfg = cfg("problem = ks-simple\nn = 10\nk = 2\ngamma = 0.9\nsolver = scf\ntau = 1e-12\nmax_scf = 60\n");
        let run = run_experiment(&cfg).unwrap();
        assert!(!run.converged);
        assert_eq!(run.scf_iterations, 60);
        assert_eq!(run.newton_iterations, 0);
    }

    #[test]
    fn gpe_variants_agree_on_the_ground_multiplier() {
        let base = "n = 6\ngamma = 1.0\ntau = 1e-10\n";
        let c = run_experiment(&cfg(&format!("problem = gpe\n{base}"))).unwrap();
        let r = run_experiment(&cfg(&format!("problem = gpe-real\n{base}"))).unwrap();
        assert!(c.converged && r.converged);
        assert!((c.eigenvalues[0] - r.eigenvalues[0]).abs() <= 1e-8);
    }

    #[test]
    fn vecgmres_matches_glgmres_counts() {
        let base = "problem = ks-simple\nn = 8\nk = 2\ngamma = 0.7\ntau = 1e-11\n";
        let gl = run_experiment(&cfg(&format!("{base}solver = newton-glgmres\n"))).unwrap();
        let vec = run_experiment(&cfg(&format!("{base}solver = newton-vecgmres\n"))).unwrap();
        assert!(gl.converged && vec.converged);
        assert_eq!(gl.newton_iterations, vec.newton_iterations);
        assert_eq!(gl.total_inner, vec.total_inner);
    }
}
