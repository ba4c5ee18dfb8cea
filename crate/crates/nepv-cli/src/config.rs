//! Flat key-value experiment configuration.
//!
//! A config file is a sequence of `key = value` lines; `#` starts a comment
//! and blank lines are skipped. Command-line `--set key=value` arguments
//! override file entries. Unknown keys are rejected so typos surface as
//! config errors instead of silently running defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nepv_core::glgmres::{GlGmresConfig, Ortho};
use nepv_core::newton::{InnerSolver, NewtonConfig};
use nepv_core::scf::ScfConfig;

use crate::error::{CliError, CliResult};

/// Where a config entry came from, for error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    File { line: usize },
    CommandLine,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File { line } => write!(f, "line {line}"),
            Source::CommandLine => write!(f, "--set"),
        }
    }
}

/// Parsed but untyped configuration: last write wins only across sources
/// (command line over file); duplicates within the file are errors.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Source)>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(&format!("reading config {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{line_no}: expected `key = value`, got `{line}`",
                    path.display()
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "{}:{line_no}: empty key",
                    path.display()
                )));
            }
            if let Some((_, Source::File { line: prev })) =
                values.insert(key.clone(), (value, Source::File { line: line_no }))
            {
                return Err(CliError::Config(format!(
                    "{}:{line_no}: key `{key}` already set on line {prev}",
                    path.display()
                )));
            }
        }
        Ok(Self { values })
    }

    /// Applies `--set key=value` overrides on top of the file contents.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> CliResult<()> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--set expects key=value, got `{item}`"))
            })?;
            self.set(key.trim(), value.trim());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values
            .insert(key.to_string(), (value.to_string(), Source::CommandLine));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }
}

/// Tracks which keys a typed reader consumed so leftovers can be reported.
struct Reader {
    raw: RawConfig,
    consumed: Vec<String>,
}

impl Reader {
    fn new(raw: RawConfig) -> Self {
        Self {
            raw,
            consumed: Vec::new(),
        }
    }

    fn take(&mut self, key: &str) -> Option<(String, Source)> {
        self.consumed.push(key.to_string());
        self.raw.values.get(key).cloned()
    }

    fn str_opt(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    fn f64_opt(&mut self, key: &str) -> CliResult<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, src)) => v.parse::<f64>().map(Some).map_err(|_| {
                CliError::Config(format!("{src}: `{key}` expects a number, got `{v}`"))
            }),
        }
    }

    fn usize_opt(&mut self, key: &str) -> CliResult<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, src)) => v.parse::<usize>().map(Some).map_err(|_| {
                CliError::Config(format!(
                    "{src}: `{key}` expects a nonnegative integer, got `{v}`"
                ))
            }),
        }
    }

    fn u64_opt(&mut self, key: &str) -> CliResult<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, src)) => v.parse::<u64>().map(Some).map_err(|_| {
                CliError::Config(format!(
                    "{src}: `{key}` expects a nonnegative integer, got `{v}`"
                ))
            }),
        }
    }

    fn bool_opt(&mut self, key: &str) -> CliResult<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, src)) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(CliError::Config(format!(
                    "{src}: `{key}` expects true/false, got `{v}`"
                ))),
            },
        }
    }

    /// Errors if any key was never consumed by a typed getter.
    fn finish(self) -> CliResult<()> {
        let mut unknown: Vec<String> = self
            .raw
            .values
            .iter()
            .filter(|(k, _)| !self.consumed.contains(k))
            .map(|(k, (_, src))| format!("`{k}` ({src})"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            unknown.sort();
            Err(CliError::Config(format!(
                "unknown key(s): {}",
                unknown.join(", ")
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemId {
    KsSimple,
    Ks3d,
    Gpe,
    GpeReal,
    Rlda,
}

impl ProblemId {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "ks-simple" => Ok(Self::KsSimple),
            "ks3d" => Ok(Self::Ks3d),
            "gpe" => Ok(Self::Gpe),
            "gpe-real" => Ok(Self::GpeReal),
            "rlda" => Ok(Self::Rlda),
            _ => Err(CliError::Config(format!(
                "unknown problem `{s}` (expected ks-simple, ks3d, gpe, gpe-real, or rlda)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::KsSimple => "ks-simple",
            Self::Ks3d => "ks3d",
            Self::Gpe => "gpe",
            Self::GpeReal => "gpe-real",
            Self::Rlda => "rlda",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverId {
    Scf,
    NewtonGlGmres,
    NewtonVecGmres,
}

impl SolverId {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "scf" => Ok(Self::Scf),
            "newton-glgmres" => Ok(Self::NewtonGlGmres),
            "newton-vecgmres" => Ok(Self::NewtonVecGmres),
            _ => Err(CliError::Config(format!(
                "unknown solver `{s}` (expected scf, newton-glgmres, or newton-vecgmres)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Scf => "scf",
            Self::NewtonGlGmres => "newton-glgmres",
            Self::NewtonVecGmres => "newton-vecgmres",
        }
    }
}

/// Fully typed and validated experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub solver: SolverId,
    pub run_id: String,
    pub out_dir: PathBuf,

    // Problem sizes and physics.
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: usize,
    pub gamma: f64,
    pub omega: f64,
    pub ell: f64,

    // Solver budgets and tolerances.
    pub tau: f64,
    pub max_newton: usize,
    pub max_scf: usize,
    pre_scf_steps: Option<usize>,
    pre_scf_tol: Option<f64>,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub ortho: Ortho,
    pub eta0: Option<f64>,
    pub eta_max: Option<f64>,
    pub gamma_ew: Option<f64>,
    pub alpha_ew: Option<f64>,
    pub backtrack_t: Option<f64>,
    pub max_backtracks: Option<usize>,
    pub postprocess: bool,

    // Robust-discriminant pipeline.
    pub dataset: Option<PathBuf>,
    pub alpha_split: f64,
    pub trials: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> CliResult<Self> {
        let mut r = Reader::new(raw);

        let problem = match r.str_opt("problem") {
            Some(p) => ProblemId::parse(&p)?,
            None => return Err(CliError::Config("missing required key `problem`".into())),
        };
        let solver = match r.str_opt("solver") {
            Some(s) => SolverId::parse(&s)?,
            None => SolverId::NewtonGlGmres,
        };

        let n = r.usize_opt("n")?;
        let m = r.usize_opt("m")?;
        let k = r.usize_opt("k")?.unwrap_or(1);
        let gamma = r.f64_opt("gamma")?.unwrap_or(1.0);
        let omega = r.f64_opt("omega")?.unwrap_or(0.85);
        let ell = r.f64_opt("ell")?.unwrap_or(1.0);

        let tau = r.f64_opt("tau")?.unwrap_or(1e-10);
        let max_newton = r.usize_opt("max_newton")?.unwrap_or(50);
        let max_scf = r.usize_opt("max_scf")?.unwrap_or(200);
        let pre_scf_steps = r.usize_opt("pre_scf_steps")?;
        let pre_scf_tol = r.f64_opt("pre_scf_tol")?;
        let max_krylov = r.usize_opt("max_krylov")?.unwrap_or(200);
        let max_restarts = r.usize_opt("max_restarts")?.unwrap_or(0);
        let ortho = match r.str_opt("ortho").as_deref() {
            None | Some("mgs") => Ortho::Mgs,
            Some("cgs2") => Ortho::Cgs2,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "`ortho` expects mgs or cgs2, got `{other}`"
                )))
            }
        };
        let eta0 = r.f64_opt("eta0")?;
        let eta_max = r.f64_opt("eta_max")?;
        let gamma_ew = r.f64_opt("gamma_ew")?;
        let alpha_ew = r.f64_opt("alpha_ew")?;
        let backtrack_t = r.f64_opt("backtrack_t")?;
        let max_backtracks = r.usize_opt("max_backtracks")?;
        let postprocess = r.bool_opt("postprocess")?.unwrap_or(true);

        let dataset = r.str_opt("dataset").map(PathBuf::from);
        let alpha_split = r.f64_opt("alpha_split")?.unwrap_or(0.6);
        let trials = r.usize_opt("trials")?.unwrap_or(50);
        let resamples = r.usize_opt("resamples")?.unwrap_or(100);
        let seed = r.u64_opt("seed")?.unwrap_or(7);

        let out_dir = PathBuf::from(r.str_opt("out_dir").unwrap_or_else(|| "nepv-out".into()));
        let run_id = r
            .str_opt("run_id")
            .unwrap_or_else(|| format!("{}-{}", problem.as_str(), solver.as_str()));

        r.finish()?;

        let cfg = Self {
            problem,
            solver,
            run_id,
            out_dir,
            n,
            m,
            k,
            gamma,
            omega,
            ell,
            tau,
            max_newton,
            max_scf,
            pre_scf_steps,
            pre_scf_tol,
            max_krylov,
            max_restarts,
            ortho,
            eta0,
            eta_max,
            gamma_ew,
            alpha_ew,
            backtrack_t,
            max_backtracks,
            postprocess,
            dataset,
            alpha_split,
            trials,
            resamples,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        match self.problem {
            ProblemId::KsSimple => {
                if self.n.is_none() {
                    return Err(CliError::Config("ks-simple requires `n`".into()));
                }
            }
            ProblemId::Ks3d => {
                if self.m.is_none() {
                    return Err(CliError::Config("ks3d requires `m` (grid side)".into()));
                }
            }
            ProblemId::Gpe | ProblemId::GpeReal => {
                if self.n.is_none() {
                    return Err(CliError::Config(format!(
                        "{} requires `n` (grid side)",
                        self.problem.as_str()
                    )));
                }
                if self.k != 1 {
                    return Err(CliError::Config(format!(
                        "{} computes the single smallest eigenpair; `k` must be 1, got {}",
                        self.problem.as_str(),
                        self.k
                    )));
                }
            }
            ProblemId::Rlda => {
                let path = self.dataset.as_ref().ok_or_else(|| {
                    CliError::Config("rlda requires `dataset` (path to a two-class file)".into())
                })?;
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "dataset file `{}` does not exist",
                        path.display()
                    )));
                }
                if self.k != 1 {
                    return Err(CliError::Config(format!(
                        "rlda solves for a single direction; `k` must be 1, got {}",
                        self.k
                    )));
                }
                if self.solver == SolverId::Scf {
                    return Err(CliError::Config(
                        "rlda's rank-one G(v) is not positive definite, so the scf solver \
                         cannot run it; use newton-glgmres or newton-vecgmres"
                            .into(),
                    ));
                }
                if !(self.alpha_split > 0.0 && self.alpha_split < 1.0) {
                    return Err(CliError::Config(format!(
                        "`alpha_split` must lie in (0, 1), got {}",
                        self.alpha_split
                    )));
                }
            }
        }
        if !(self.tau > 0.0) {
            return Err(CliError::Config(format!(
                "`tau` must be positive, got {}",
                self.tau
            )));
        }
        if self.max_krylov == 0 {
            return Err(CliError::Config("`max_krylov` must be at least 1".into()));
        }
        Ok(())
    }

    /// SCF preprocessing for the Newton solvers: explicit keys win, otherwise
    /// each problem family keeps its benchmark default (2 steps for the 1-d
    /// density model, 50 steps or 5e-5 for the 3-d one, 4 steps or 1e-3 for
    /// the condensate; none for the discriminant pipeline, whose G is not
    /// positive definite). `pre_scf_steps = 0` disables preprocessing.
    pub fn pre_scf(&self) -> Option<ScfConfig> {
        let (default_tol, default_steps) = match self.problem {
            ProblemId::KsSimple => (self.tau, 2),
            ProblemId::Ks3d => (5e-5, 50),
            ProblemId::Gpe | ProblemId::GpeReal => (1e-3, 4),
            ProblemId::Rlda => return None,
        };
        let steps = self.pre_scf_steps.unwrap_or(default_steps);
        if steps == 0 {
            return None;
        }
        Some(ScfConfig {
            tol: self.pre_scf_tol.unwrap_or(default_tol),
            max_iter: steps,
            which: None,
        })
    }

    pub fn glgmres_config(&self) -> GlGmresConfig {
        GlGmresConfig {
            max_krylov: self.max_krylov,
            max_restarts: self.max_restarts,
            ortho: self.ortho,
            ..GlGmresConfig::default()
        }
    }

    pub fn newton_config(&self) -> NewtonConfig {
        let mut cfg = NewtonConfig {
            tau: self.tau,
            max_newton: self.max_newton,
            pre_scf: self.pre_scf(),
            glgmres: self.glgmres_config(),
            inner: match self.solver {
                SolverId::NewtonVecGmres => InnerSolver::VecGmres,
                _ => InnerSolver::GlGmres,
            },
            postprocess: self.postprocess,
            ..NewtonConfig::default()
        };
        if let Some(v) = self.eta0 {
            cfg.forcing.eta0 = v;
        }
        if let Some(v) = self.eta_max {
            cfg.forcing.eta_max = v;
        }
        if let Some(v) = self.gamma_ew {
            cfg.forcing.gamma_ew = v;
        }
        if let Some(v) = self.alpha_ew {
            cfg.forcing.alpha_ew = v;
        }
        if let Some(v) = self.backtrack_t {
            cfg.backtrack.t = v;
        }
        if let Some(v) = self.max_backtracks {
            cfg.backtrack.max_backtracks = v;
        }
        cfg
    }

    /// Standalone SCF configuration (`solver = scf`).
    pub fn scf_config(&self) -> ScfConfig {
        ScfConfig {
            tol: self.tau,
            max_iter: self.max_scf,
            which: None,
        }
    }

    /// Effective output root: the `NEPV_OUT` environment variable overrides
    /// the config's `out_dir`.
    pub fn out_root(&self) -> PathBuf {
        match std::env::var_os("NEPV_OUT") {
            Some(root) if !root.is_empty() => PathBuf::from(root),
            _ => self.out_dir.clone(),
        }
    }

    /// Clone with one key overridden (sweep points), tagging the run id.
    pub fn with_override(&self, raw: &RawConfig, key: &str, value: &str) -> CliResult<Self> {
        let mut raw = raw.clone();
        raw.set(key, value);
        let mut cfg = Self::from_raw(raw)?;
        cfg.run_id = format!("{}-{key}{value}", self.run_id);
        Ok(cfg)
    }
}
