//! `nepv` — benchmark harness for the eigenvector-dependent nonlinear
//! eigensolvers in `nepv-core`.
//!
//! Subcommands:
//! * `run <config>` — one experiment, writing `trace.csv`, `summary.csv`,
//!   and `timings.csv` into `<out>/<run_id>/`.
//! * `sweep <config> --param key=v1,v2,...` — the experiment repeated over a
//!   parameter list, plus a combined plot-ready `sweep.csv`.
//! * `compare <config> --solvers a,b[,c]` — the same problem under several
//!   solvers side by side, plus `compare.csv`.
//! * `lemma1-check --problem ks-simple --n 8 --k 2` — equivalence of the
//!   matrix-space Krylov solver with vector GMRES on the explicit
//!   Kronecker-form operator.
//!
//! Exit codes: 0 success, 2 config error, 3 non-convergence or failed check,
//! 4 I/O error. The `NEPV_OUT` environment variable overrides the configured
//! output root.

mod config;
mod dataset;
mod error;
mod experiment;
mod lemma1;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, RawConfig, SolverId};
use error::{CliError, CliResult};
use experiment::{run_experiment, RunResult};

#[derive(Parser)]
#[command(
    name = "nepv",
    version,
    about = "Benchmarks for eigenvector-dependent nonlinear eigenvalue solvers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment from a config file.
    Run {
        /// Flat key-value config file.
        config: PathBuf,
        /// Override a config entry, e.g. --set gamma=0.9 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the experiment once per value of a swept parameter.
    Sweep {
        config: PathBuf,
        /// Swept key and comma-separated values, e.g. gamma=0.5,0.6,0.7.
        /// An empty list (`gamma=`) is a no-op producing an empty sweep file.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        param: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the same problem under several solvers and tabulate the results.
    Compare {
        config: PathBuf,
        /// At least two of: scf, newton-glgmres, newton-vecgmres.
        #[arg(long, value_delimiter = ',', value_name = "S1,S2[,S3]")]
        solvers: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check that matrix-space and vectorized Krylov solves coincide.
    #[command(name = "lemma1-check")]
    Lemma1Check {
        /// ks-simple or gpe-real.
        #[arg(long)]
        problem: String,
        /// Matrix size (ks-simple) or grid side (gpe-real).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Number of Krylov steps to compare.
        #[arg(long = "m-max", default_value_t = 10)]
        m_max: usize,
        /// Largest accepted relative difference.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.85)]
        omega: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nepv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Run { config, set } => cmd_run(&config, &set),
        Cmd::Sweep { config, param, set } => cmd_sweep(&config, &param, &set),
        Cmd::Compare {
            config,
            solvers,
            set,
        } => cmd_compare(&config, &solvers, &set),
        Cmd::Lemma1Check {
            problem,
            n,
            k,
            m_max,
            tol,
            gamma,
            omega,
        } => cmd_lemma1(lemma1::Lemma1Args {
            problem,
            n,
            k,
            m_max,
            tol,
            gamma,
            omega,
        }),
    }
}

fn load_config(path: &PathBuf, set: &[String]) -> CliResult<(RawConfig, ExperimentConfig)> {
    let mut raw = RawConfig::from_file(path)?;
    raw.apply_overrides(set)?;
    let cfg = ExperimentConfig::from_raw(raw.clone())?;
    Ok((raw, cfg))
}

fn describe(run: &RunResult) {
    let mean = run
        .mean_krylov
        .map(|m| format!("{m:.1}"))
        .unwrap_or_else(|| "-".into());
    let mut line = format!(
        "run {}: converged={} final_residual={:.3e} outer={}+{} mean_krylov={}",
        run.run_id,
        run.converged,
        run.final_residual,
        run.scf_iterations,
        run.newton_iterations,
        mean
    );
    if let Some(agg) = &run.rlda {
        line.push_str(&format!(
            " newton_tsa={:.4} clda_tsa={:.4}",
            agg.newton_tsa_mean, agg.clda_tsa_mean
        ));
    }
    println!("{line}");
}

fn cmd_run(path: &PathBuf, set: &[String]) -> CliResult<()> {
    let (_, cfg) = load_config(path, set)?;
    let run = run_experiment(&cfg)?;
    let dir = output::write_run(&cfg.out_root(), &run)?;
    describe(&run);
    println!("wrote {}", dir.display());
    if run.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "run {} finished at residual {:.3e}",
            run.run_id, run.final_residual
        )))
    }
}

fn cmd_sweep(path: &PathBuf, param: &str, set: &[String]) -> CliResult<()> {
    let (raw, base) = load_config(path, set)?;
    let (key, values) = param.split_once('=').ok_or_else(|| {
        CliError::Config(format!("--param expects key=v1,v2,..., got `{param}`"))
    })?;
    let values: Vec<&str> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();

    let root = base.out_root();
    let sweep_dir = output::run_dir(&root, &format!("{}-sweep-{key}", base.run_id));
    let mut rows: Vec<(String, RunResult)> = Vec::new();
    for value in &values {
        let cfg = base.with_override(&raw, key, value)?;
        let run = run_experiment(&cfg)?;
        output::write_run(&root, &run)?;
        describe(&run);
        rows.push((value.to_string(), run));
    }
    output::write_file(&sweep_dir.join("sweep.csv"), &output::sweep_csv(key, &rows))?;
    println!("wrote {}", sweep_dir.join("sweep.csv").display());

    let failed: Vec<&str> = rows
        .iter()
        .filter(|(_, r)| !r.converged)
        .map(|(v, _)| v.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "{key} in {{{}}} did not converge",
            failed.join(", ")
        )))
    }
}

fn cmd_compare(path: &PathBuf, solvers: &[String], set: &[String]) -> CliResult<()> {
    if solvers.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least two solvers, got {}",
            solvers.len()
        )));
    }
    let (raw, base) = load_config(path, set)?;
    let explicit_run_id = raw.get("run_id").map(str::to_string);

    let mut runs = Vec::new();
    for solver in solvers {
        SolverId::parse(solver)?;
        let mut raw = raw.clone();
        raw.set("solver", solver);
        if let Some(id) = &explicit_run_id {
            raw.set("run_id", &format!("{id}-{solver}"));
        }
        let cfg = ExperimentConfig::from_raw(raw)?;
        let run = run_experiment(&cfg)?;
        output::write_run(&base.out_root(), &run)?;
        describe(&run);
        runs.push(run);
    }

    println!(
        "{:<18} {:>9} {:>14} {:>6} {:>7} {:>12} {:>12}",
        "solver", "converged", "residual", "scf", "newton", "mean_krylov", "total_inner"
    );
    for run in &runs {
        let mean = run
            .mean_krylov
            .map(|m| format!("{m:.1}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<18} {:>9} {:>14.3e} {:>6} {:>7} {:>12} {:>12}",
            run.solver,
            run.converged,
            run.final_residual,
            run.scf_iterations,
            run.newton_iterations,
            mean,
            run.total_inner
        );
    }

    let stem = explicit_run_id.unwrap_or_else(|| base.problem.as_str().to_string());
    let compare_dir = output::run_dir(&base.out_root(), &format!("{stem}-compare"));
    output::write_file(&compare_dir.join("compare.csv"), &output::compare_csv(&runs))?;
    println!("wrote {}", compare_dir.join("compare.csv").display());

    if runs.iter().all(|r| r.converged) {
        Ok(())
    } else {
        Err(CliError::NonConvergence(
            "at least one compared solver did not converge".into(),
        ))
    }
}

fn cmd_lemma1(args: lemma1::Lemma1Args) -> CliResult<()> {
    let report = lemma1::lemma1_check(&args)?;
    println!("{:>3} {:>16} {:>16}", "m", "iterate_diff", "hessenberg_diff");
    for row in &report.rows {
        println!(
            "{:>3} {:>16.3e} {:>16.3e}",
            row.m, row.iterate_rel_diff, row.hessenberg_diff
        );
    }
    let root = match std::env::var_os("NEPV_OUT") {
        Some(r) if !r.is_empty() => PathBuf::from(r),
        _ => PathBuf::from("nepv-out"),
    };
    let dir = output::run_dir(
        &root,
        &format!("lemma1-{}-n{}-k{}", args.problem, args.n, args.k),
    );
    output::write_file(&dir.join("lemma1.csv"), &lemma1::lemma1_csv(&report))?;
    println!("wrote {}", dir.join("lemma1.csv").display());
    if report.pass {
        println!(
            "PASS: {} steps agree to {:.1e} (max iterate diff {:.3e}, max Hessenberg diff {:.3e})",
            report.rows.len(),
            report.tol,
            report.max_iterate_diff(),
            report.max_hessenberg_diff()
        );
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "routes disagree beyond {:.1e}: max iterate diff {:.3e}, max Hessenberg diff {:.3e}",
            report.tol,
            report.max_iterate_diff(),
            report.max_hessenberg_diff()
        )))
    }
}
