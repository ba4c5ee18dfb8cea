//! End-to-end tests of the `nepv` binary: exit codes, written files, and
//! the determinism contract on summary output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nepv")
}

/// Fresh per-test scratch directory under cargo's integration-test tmpdir.
fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn write(path: &Path, contents: &str) {
    fs::write(path, contents).expect("write test file");
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn nepv(args: &[&str], out_root: &Path) -> Outcome {
    let output = Command::new(bin())
        .args(args)
        .env("NEPV_OUT", out_root)
        .output()
        .expect("spawn nepv");
    Outcome {
        code: output.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

const KS_CONF: &str = "problem = ks-simple\nn = 10\nk = 2\ngamma = 0.75\ntau = 1e-12\n";

fn data_rows(csv: &str) -> usize {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count()
        .saturating_sub(1) // column-name line
}

#[test]
fn run_writes_outputs_and_exits_zero_on_convergence() {
    let dir = scratch("run-ok");
    let conf = dir.join("ks.conf");
    write(&conf, KS_CONF);
    let out = dir.join("out");

    let res = nepv(&["run", conf.to_str().unwrap()], &out);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    assert!(res.stdout.contains("converged=true"));

    let run_dir = out.join("ks-simple-newton-glgmres");
    for file in ["trace.csv", "summary.csv", "timings.csv"] {
        assert!(run_dir.join(file).is_file(), "missing {file}");
    }
    let summary = fs::read_to_string(run_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("# nepv-summary v1\n"));
    assert_eq!(data_rows(&summary), 1);
    let trace = fs::read_to_string(run_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("# nepv-trace v1\n"));
    // Two preprocessing steps then a handful of Newton rows.
    assert!(trace.matches(",scf,").count() == 2, "trace: {trace}");
    assert!(trace.matches(",newton,").count() >= 2);
}

#[test]
fn rerunning_with_the_same_seed_reproduces_summary_bytes() {
    let dir = scratch("run-determinism");
    let conf = dir.join("ks.conf");
    write(&conf, KS_CONF);

    let (a, b) = (dir.join("a"), dir.join("b"));
    assert_eq!(nepv(&["run", conf.to_str().unwrap()], &a).code, 0);
    assert_eq!(nepv(&["run", conf.to_str().unwrap()], &b).code, 0);

    let rel = "ks-simple-newton-glgmres/summary.csv";
    let sa = fs::read(a.join(rel)).unwrap();
    let sb = fs::read(b.join(rel)).unwrap();
    assert_eq!(sa, sb, "summary.csv must be byte-identical across reruns");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = scratch("run-missing");
    let res = nepv(&["run", dir.join("nope.conf").to_str().unwrap()], &dir);
    assert_eq!(res.code, 4);
    assert!(res.stderr.contains("i/o error"), "stderr: {}", res.stderr);
}

#[test]
fn unknown_config_key_is_a_config_error_with_line_number() {
    let dir = scratch("run-badkey");
    let conf = dir.join("bad.conf");
    write(&conf, "problem = ks-simple\nn = 10\nbogus_key = 1\n");
    let res = nepv(&["run", conf.to_str().unwrap()], &dir);
    assert_eq!(res.code, 2);
    assert!(
        res.stderr.contains("bogus_key") && res.stderr.contains("line 3"),
        "stderr: {}",
        res.stderr
    );
}

#[test]
fn nonconvergent_run_exits_three_but_still_writes_outputs() {
    let dir = scratch("run-nonconv");
    let conf = dir.join("ks.conf");
    write(
        &conf,
        "problem = ks-simple\nn = 10\nk = 2\ngamma = 0.9\nsolver = scf\nmax_scf = 60\n",
    );
    let out = dir.join("out");
    let res = nepv(&["run", conf.to_str().unwrap()], &out);
    assert_eq!(res.code, 3, "stderr: {}", res.stderr);
    assert!(res.stdout.contains("converged=false"));
    assert!(out.join("ks-simple-scf/summary.csv").is_file());
}

#[test]
fn set_overrides_replace_config_values() {
    let dir = scratch("run-set");
    let conf = dir.join("ks.conf");
    write(&conf, KS_CONF);
    let out = dir.join("out");
    let res = nepv(
        &["run", conf.to_str().unwrap(), "--set", "solver=scf", "--set", "gamma=0.5"],
        &out,
    );
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    // run_id reflects the overridden solver.
    assert!(out.join("ks-simple-scf/summary.csv").is_file());
    let summary = fs::read_to_string(out.join("ks-simple-scf/summary.csv")).unwrap();
    assert!(summary.contains(",scf,"));
}

#[test]
fn sweep_writes_combined_csv_and_flags_failed_points() {
    let dir = scratch("sweep-mixed");
    let conf = dir.join("ks.conf");
    write(
        &conf,
        "problem = ks-simple\nn = 10\nk = 2\nsolver = scf\nmax_scf = 80\n",
    );
    let out = dir.join("out");
    let res = nepv(
        &["sweep", conf.to_str().unwrap(), "--param", "gamma=0.5,0.9"],
        &out,
    );
    assert_eq!(res.code, 3, "0.9 cannot converge; stderr: {}", res.stderr);
    assert!(res.stderr.contains("0.9"));

    let sweep = fs::read_to_string(out.join("ks-simple-scf-sweep-gamma/sweep.csv")).unwrap();
    assert!(sweep.starts_with("# nepv-sweep v1\n"));
    assert_eq!(data_rows(&sweep), 2);
    assert!(sweep.contains("gamma,0.5,") && sweep.contains("gamma,0.9,"));
    // Each swept point also has its own full run directory.
    assert!(out.join("ks-simple-scf-gamma0.5/trace.csv").is_file());
    assert!(out.join("ks-simple-scf-gamma0.9/trace.csv").is_file());
}

#[test]
fn empty_sweep_list_is_a_noop_with_header_only_file() {
    let dir = scratch("sweep-empty");
    let conf = dir.join("ks.conf");
    write(&conf, KS_CONF);
    let out = dir.join("out");
    let res = nepv(&["sweep", conf.to_str().unwrap(), "--param", "gamma="], &out);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let sweep =
        fs::read_to_string(out.join("ks-simple-newton-glgmres-sweep-gamma/sweep.csv")).unwrap();
    assert_eq!(data_rows(&sweep), 0);
}

#[test]
fn compare_needs_at_least_two_solvers() {
    let dir = scratch("compare-one");
    let conf = dir.join("ks.conf");
    write(&conf, KS_CONF);
    let res = nepv(
        &["compare", conf.to_str().unwrap(), "--solvers", "scf"],
        &dir,
    );
    assert_eq!(res.code, 2);
}

#[test]
fn compare_tabulates_all_requested_solvers() {
    let dir = scratch("compare-three");
    let conf = dir.join("ks.conf");
    write(&conf, "problem = ks-simple\nn = 10\nk = 2\ngamma = 0.5\n");
    let out = dir.join("out");
    let res = nepv(
        &[
            "compare",
            conf.to_str().unwrap(),
            "--solvers",
            "scf,newton-glgmres,newton-vecgmres",
        ],
        &out,
    );
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let csv = fs::read_to_string(out.join("ks-simple-compare/compare.csv")).unwrap();
    assert_eq!(data_rows(&csv), 3);
    // The two inner-solver variants traverse identical Krylov spaces.
    let pick = |solver: &str| -> String {
        csv.lines()
            .find(|l| l.starts_with(solver))
            .unwrap_or_else(|| panic!("{solver} row missing"))
            .split(',')
            .skip(1)
            .collect::<Vec<_>>()
            .join(",")
    };
    assert_eq!(pick("newton-glgmres,"), pick("newton-vecgmres,"));
}

#[test]
fn lemma1_check_passes_for_both_supported_problems() {
    let dir = scratch("lemma1");
    for (problem, n, k) in [("ks-simple", "8", "2"), ("gpe-real", "4", "1")] {
        let res = nepv(
            &["lemma1-check", "--problem", problem, "--n", n, "--k", k],
            &dir,
        );
        assert_eq!(res.code, 0, "{problem}: {}", res.stderr);
        assert!(res.stdout.contains("PASS"), "{problem}: {}", res.stdout);
        let csv = dir.join(format!("lemma1-{problem}-n{n}-k{k}/lemma1.csv"));
        let body = fs::read_to_string(csv).unwrap();
        assert_eq!(data_rows(&body), 10);
    }
}

#[test]
fn malformed_dataset_cell_reports_file_and_line() {
    let dir = scratch("rlda-bad-data");
    let data = dir.join("broken.csv");
    write(&data, "1.0,2.0,good\n3.0,4.0,bad\n5.0,oops,good\n");
    let conf = dir.join("rlda.conf");
    write(
        &conf,
        &format!("problem = rlda\ndataset = {}\ntrials = 2\n", data.display()),
    );
    let res = nepv(&["run", conf.to_str().unwrap()], &dir);
    assert_eq!(res.code, 4, "stderr: {}", res.stderr);
    assert!(res.stderr.contains(":3:"), "stderr: {}", res.stderr);
}

#[test]
fn rlda_on_separable_synthetic_data_reaches_full_accuracy() {
    let dir = scratch("rlda-synth");
    // Two well-separated clusters; any sensible discriminant is exact.
    let mut rows = String::new();
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for i in 0..40 {
        let (mu, label) = if i % 2 == 0 { (3.0, "pos") } else { (-3.0, "neg") };
        for _ in 0..4 {
            rows.push_str(&format!("{:.6},", mu + next()));
        }
        rows.push_str(label);
        rows.push('\n');
    }
    let data = dir.join("synth.csv");
    write(&data, &rows);
    let conf = dir.join("rlda.conf");
    write(
        &conf,
        &format!(
            "problem = rlda\ndataset = {}\ntrials = 3\nresamples = 30\ntau = 1e-9\n",
            data.display()
        ),
    );
    let out = dir.join("out");
    let res = nepv(&["run", conf.to_str().unwrap()], &out);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    assert!(res.stdout.contains("newton_tsa=1.0000"), "{}", res.stdout);
    let trials = fs::read_to_string(out.join("rlda-newton-glgmres/rlda_trials.csv")).unwrap();
    assert_eq!(data_rows(&trials), 3);
}
