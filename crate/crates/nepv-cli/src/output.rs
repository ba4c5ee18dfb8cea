//! CSV writers.
//!
//! Every file starts with a versioned `# nepv-... v1` comment line so
//! downstream plotting can detect schema changes. Summary files contain only
//! deterministic quantities — rerunning the same config and seed reproduces
//! them byte for byte — while wall-clock times go to `trace.csv` rows and
//! `timings.csv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::experiment::RunResult;

/// Scientific notation with fixed precision, deterministic for equal inputs.
pub fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn opt_plain<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_mean(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(&format!("creating {}", parent.display()), e))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

/// Directory a run writes into: `<root>/<run_id>/`.
pub fn run_dir(root: &Path, run_id: &str) -> PathBuf {
    root.join(run_id)
}

pub const TRACE_HEADER: &str = "# nepv-trace v1";
pub const SUMMARY_HEADER: &str = "# nepv-summary v1";
pub const SWEEP_HEADER: &str = "# nepv-sweep v1";
pub const COMPARE_HEADER: &str = "# nepv-compare v1";
pub const TIMINGS_HEADER: &str = "# nepv-timings v1";
pub const RLDA_TRIALS_HEADER: &str = "# nepv-rlda-trials v1";
pub const LEMMA1_HEADER: &str = "# nepv-lemma1 v1";

pub fn trace_csv(run: &RunResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_HEADER}");
    let _ = writeln!(
        out,
        "run_id,phase,iter,residual_fro,eta,krylov_iters,theta,backtracks,wall_ms"
    );
    for (i, row) in run.rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            run.run_id,
            row.phase,
            i,
            sci(row.residual),
            opt_sci(row.eta),
            opt_plain(row.krylov),
            opt_sci(row.theta),
            opt_plain(row.backtracks),
            row.wall_ms
        );
    }
    out
}

pub fn summary_line_header() -> String {
    "run_id,problem,solver,converged,final_residual,scf_iterations,newton_iterations,\
     total_outer_iterations,mean_krylov_per_newton_step,total_inner_iterations,\
     eigenvalues,newton_tsa_mean,clda_tsa_mean"
        .to_string()
}

pub fn summary_line(run: &RunResult) -> String {
    let eigs = run
        .eigenvalues
        .iter()
        .map(|&x| sci(x))
        .collect::<Vec<_>>()
        .join(";");
    let (tsa_n, tsa_c) = match &run.rlda {
        Some(a) => (sci(a.newton_tsa_mean), sci(a.clda_tsa_mean)),
        None => (String::new(), String::new()),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        run.run_id,
        run.problem,
        run.solver,
        run.converged,
        sci(run.final_residual),
        run.scf_iterations,
        run.newton_iterations,
        run.scf_iterations + run.newton_iterations,
        opt_mean(run.mean_krylov),
        run.total_inner,
        eigs,
        tsa_n,
        tsa_c
    )
}

pub fn summary_csv(run: &RunResult) -> String {
    format!(
        "{SUMMARY_HEADER}\n{}\n{}\n",
        summary_line_header(),
        summary_line(run)
    )
}

pub fn timings_csv(run: &RunResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TIMINGS_HEADER}");
    let _ = writeln!(out, "run_id,total_wall_ms");
    let _ = writeln!(out, "{},{:.3}", run.run_id, run.total_wall_ms);
    out
}

/// Per-trial rows of a robust-discriminant run (deterministic columns only).
pub fn rlda_trials_csv(run: &RunResult) -> Option<String> {
    let agg = run.rlda.as_ref()?;
    let mut out = String::new();
    let _ = writeln!(out, "{RLDA_TRIALS_HEADER}");
    let _ = writeln!(
        out,
        "trial,seed_used,newton_tsa,clda_tsa,newton_iterations,newton_converged,\
         final_residual,max_krylov_per_step"
    );
    for (i, t) in agg.summary.trials.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i,
            t.seed_used,
            sci(t.newton_tsa),
            sci(t.clda_tsa),
            t.newton_iterations,
            t.newton_converged,
            sci(t.final_residual),
            t.max_krylov_per_step
        );
    }
    Some(out)
}

/// Writes every per-run file; returns the run directory.
pub fn write_run(root: &Path, run: &RunResult) -> CliResult<PathBuf> {
    let dir = run_dir(root, &run.run_id);
    write_file(&dir.join("trace.csv"), &trace_csv(run))?;
    write_file(&dir.join("summary.csv"), &summary_csv(run))?;
    write_file(&dir.join("timings.csv"), &timings_csv(run))?;
    if let Some(trials) = rlda_trials_csv(run) {
        write_file(&dir.join("rlda_trials.csv"), &trials)?;
    }
    Ok(dir)
}

/// One sweep row per parameter value, in sweep order (plot-ready: the file is
/// one curve of iteration counts over the swept parameter).
pub fn sweep_csv(param: &str, rows: &[(String, RunResult)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SWEEP_HEADER}");
    let _ = writeln!(
        out,
        "param,value,run_id,converged,final_residual,scf_iterations,newton_iterations,\
         total_outer_iterations,mean_krylov_per_newton_step"
    );
    for (value, run) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            param,
            value,
            run.run_id,
            run.converged,
            sci(run.final_residual),
            run.scf_iterations,
            run.newton_iterations,
            run.scf_iterations + run.newton_iterations,
            opt_mean(run.mean_krylov),
        );
    }
    out
}

pub fn compare_csv(rows: &[RunResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{COMPARE_HEADER}");
    let _ = writeln!(
        out,
        "solver,converged,final_residual,scf_iterations,newton_iterations,\
         total_outer_iterations,mean_krylov_per_newton_step,total_inner_iterations"
    );
    for run in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            run.solver,
            run.converged,
            sci(run.final_residual),
            run.scf_iterations,
            run.newton_iterations,
            run.scf_iterations + run.newton_iterations,
            opt_mean(run.mean_krylov),
            run.total_inner
        );
    }
    out
}
