//! Experiment configuration: TOML files layered over named presets.
//!
//! Resolution order, later layers winning key by key:
//! preset (from `--preset`, the file's `preset` key, or the subcommand
//! default), then the config file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{CliError, Result};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    MatcompSynth,
    MatcompRatings,
    CsRecovery,
    CsNoise,
    Diagnose,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::MatcompSynth => "matcomp_synth",
            Task::MatcompRatings => "matcomp_ratings",
            Task::CsRecovery => "cs_recovery",
            Task::CsNoise => "cs_noise",
            Task::Diagnose => "diagnose",
        }
    }

    pub fn is_matcomp(&self) -> bool {
        matches!(self, Task::MatcompSynth | Task::MatcompRatings)
    }

    pub fn is_cs(&self) -> bool {
        matches!(self, Task::CsRecovery | Task::CsNoise)
    }

    fn allowed_methods(&self) -> &'static [Method] {
        match self {
            Task::MatcompSynth | Task::MatcompRatings => &[Method::Dys, Method::Drs, Method::Svp, Method::Svt],
            Task::CsRecovery | Task::CsNoise => &[Method::Dys, Method::Admm, Method::Dca],
            Task::Diagnose => &[],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dys,
    Drs,
    Svp,
    Svt,
    Admm,
    Dca,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dys => "dys",
            Method::Drs => "drs",
            Method::Svp => "svp",
            Method::Svt => "svt",
            Method::Admm => "admm",
            Method::Dca => "dca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatcompParams {
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub p: Vec<f64>,
    pub lambda: f64,
    /// A synthetic trial counts as a success below this relative error.
    pub success_tol: f64,
    /// `UserID::MovieID::Rating::Timestamp` file for `matcomp_ratings`.
    pub ratings: Option<PathBuf>,
    pub test_fraction: f64,
}

impl Default for MatcompParams {
    fn default() -> Self {
        Self {
            n: vec![300],
            r: vec![10],
            p: vec![0.3],
            lambda: 1.5e-6,
            success_tol: 1e-3,
            ratings: None,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsParams {
    pub m: Vec<usize>,
    pub n: usize,
    pub s: Vec<usize>,
    pub refinement: usize,
    /// Minimum support separation; `2 · refinement` when absent.
    pub min_sep: Option<usize>,
    pub sigma: Vec<f64>,
    pub lambda_l12: f64,
    pub lambda_lasso: f64,
}

impl Default for CsParams {
    fn default() -> Self {
        Self {
            m: vec![100],
            n: 1500,
            s: vec![5],
            refinement: 10,
            min_sep: None,
            sigma: vec![0.0],
            lambda_l12: dysplit::cs::L12_LAMBDA,
            lambda_lasso: dysplit::cs::ADMM_LAMBDA,
        }
    }
}

impl CsParams {
    pub fn min_sep(&self) -> usize {
        self.min_sep.unwrap_or(2 * self.refinement)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseParams {
    pub lipschitz_f: f64,
    pub weak_convexity: f64,
    pub beta: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
}

impl Default for DiagnoseParams {
    fn default() -> Self {
        Self { lipschitz_f: 1.0, weak_convexity: 0.0, beta: 1.0, grid_min: 1e-4, grid_max: 1.0, grid_points: 25 }
    }
}

/// Per-run solver knobs; absent fields keep each method's defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOverrides {
    pub max_iter: Option<usize>,
    /// DCA inner iteration cap.
    pub max_inner: Option<usize>,
    /// Masked relative residual threshold for completion solvers.
    pub tol: Option<f64>,
    pub eps_abs: Option<f64>,
    pub eps_rel: Option<f64>,
    /// Fixed step size for the splitting methods; disables the decay heuristic.
    pub gamma: Option<f64>,
    /// Multiplier of the decay heuristic's starting step `k γ₀`.
    pub gamma_k: Option<f64>,
    /// Lipschitz constant assumed for `∇H` when computing `γ₀`.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Set by presets whose grids take hours.
    #[serde(default)]
    pub long_running: bool,
    #[serde(default)]
    pub matcomp: MatcompParams,
    #[serde(default)]
    pub cs: CsParams,
    #[serde(default)]
    pub diagnose: DiagnoseParams,
    #[serde(default)]
    pub solver: SolverOverrides,
}

fn one() -> usize {
    1
}

/// Command-line values applied after the preset and file layers.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: Table) -> Result<Self> {
        let cfg: Self = Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds the layered configuration. `default_preset` is used when neither
    /// the flag nor the file names one.
    pub fn load(
        preset: Option<&str>,
        file: Option<&Path>,
        default_preset: Option<&str>,
        overrides: &Overrides,
    ) -> Result<Self> {
        let mut file_table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
            }
            None => Table::new(),
        };
        let file_preset = match file_table.remove("preset") {
            Some(Value::String(s)) => Some(s),
            Some(other) => return Err(CliError::config(format!("`preset` must be a string, got {other}"))),
            None => None,
        };
        let name = preset.map(str::to_owned).or(file_preset).or(default_preset.map(str::to_owned));
        let mut table = match name {
            Some(name) => presets::find(&name)?.table(),
            None => Table::new(),
        };
        merge(&mut table, file_table);

        let mut cfg: Self = Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = overrides.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &overrides.out {
            cfg.out = Some(out.clone());
        }
        if let Some(path) = &overrides.ratings {
            cfg.matcomp.ratings = Some(path.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.task != Task::Diagnose && self.methods.is_empty() {
            return bad(format!("task {} needs at least one method", self.task));
        }
        let allowed = self.task.allowed_methods();
        if let Some(m) = self.methods.iter().find(|m| !allowed.contains(m)) {
            return bad(format!("method `{m}` is not available for task {}", self.task));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method `{m}` listed twice"));
            }
        }
        if self.task.is_matcomp() {
            self.validate_matcomp()?;
        }
        if self.task.is_cs() {
            self.validate_cs()?;
        }
        if self.task == Task::Diagnose {
            let d = &self.diagnose;
            if ![d.lipschitz_f, d.weak_convexity, d.beta].iter().all(|v| v.is_finite() && *v >= 0.0) {
                return bad("diagnose constants must be finite and >= 0".into());
            }
            if !(d.grid_min > 0.0 && d.grid_max > d.grid_min && d.grid_max.is_finite() && d.grid_points >= 2) {
                return bad("diagnose grid needs 0 < grid_min < grid_max and grid_points >= 2".into());
            }
        }
        self.validate_solver()
    }

    fn validate_matcomp(&self) -> Result<()> {
        let mc = &self.matcomp;
        let bad = |msg: String| Err(CliError::Config(msg));
        if mc.r.is_empty() || mc.r.contains(&0) {
            return bad("matcomp.r must list ranks >= 1".into());
        }
        if !(mc.lambda >= 0.0 && mc.lambda.is_finite()) {
            return bad(format!("matcomp.lambda = {} must be >= 0", mc.lambda));
        }
        match self.task {
            Task::MatcompSynth => {
                if mc.n.is_empty() || mc.p.is_empty() {
                    return bad("matcomp.n and matcomp.p must be non-empty".into());
                }
                if let Some(p) = mc.p.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
                    return bad(format!("sampling ratio {p} outside (0, 1]"));
                }
                for &n in &mc.n {
                    if let Some(r) = mc.r.iter().find(|&&r| r > n) {
                        return bad(format!("rank {r} exceeds n = {n}"));
                    }
                }
                if !(mc.success_tol > 0.0) {
                    return bad("matcomp.success_tol must be positive".into());
                }
            }
            Task::MatcompRatings => {
                if mc.ratings.is_none() {
                    return bad("task matcomp_ratings needs matcomp.ratings (or --ratings PATH)".into());
                }
                if !(0.0..1.0).contains(&mc.test_fraction) {
                    return bad(format!("test_fraction {} outside [0, 1)", mc.test_fraction));
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    fn validate_cs(&self) -> Result<()> {
        let cs = &self.cs;
        let bad = |msg: String| Err(CliError::Config(msg));
        if cs.m.is_empty() || cs.s.is_empty() || cs.sigma.is_empty() {
            return bad("cs.m, cs.s and cs.sigma must be non-empty".into());
        }
        if cs.m.contains(&0) || cs.n == 0 || cs.refinement == 0 {
            return bad("cs dimensions and refinement must be >= 1".into());
        }
        if let Some(s) = cs.s.iter().find(|&&s| s == 0 || s * cs.min_sep() > cs.n) {
            return bad(format!(
                "sparsity {s} with separation {} does not fit in n = {}",
                cs.min_sep(),
                cs.n
            ));
        }
        if let Some(sigma) = cs.sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return bad(format!("noise level {sigma} must be >= 0"));
        }
        if !(cs.lambda_l12 >= 0.0 && cs.lambda_lasso >= 0.0) {
            return bad("cs lambdas must be >= 0".into());
        }
        Ok(())
    }

    fn validate_solver(&self) -> Result<()> {
        let s = &self.solver;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(CliError::Config(format!("solver.{name} = {v} must be positive"))),
            _ => Ok(()),
        };
        positive("tol", s.tol)?;
        positive("eps_abs", s.eps_abs)?;
        positive("eps_rel", s.eps_rel)?;
        positive("gamma", s.gamma)?;
        positive("beta", s.beta.map(|b| b + 1.0))?;
        if let Some(k) = s.gamma_k {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(CliError::config(format!("solver.gamma_k = {k} must be >= 1")));
            }
        }
        if s.max_iter == Some(0) || s.max_inner == Some(0) {
            return Err(CliError::config("iteration caps must be >= 1"));
        }
        Ok(())
    }
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
