//! Trial execution and aggregation.
//!
//! Every (grid point, trial) pair is an independent job seeded with
//! `seed + trial`; jobs run in parallel and the table is assembled afterwards
//! in a fixed order: for each grid point and method, its trial rows followed
//! by one aggregate row.

use std::time::Instant;

use dysplit::cs::{self, DcaOptions, SensingInstance, SparseProblem, DCA_MAX_INNER};
use dysplit::matcomp::{
    self, drs_step_policy, dys_step_policy, svp_complete, svt_complete, CompletionInstance, CompletionProblem,
    CompletionResult, SvpStep, SvtParams,
};
use dysplit::linalg::masked_relative_residual;
use dysplit::{ObservationSet, RngSeed, RunStatus, StepSize, StoppingRule};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method, SolverOverrides, Task};
use crate::diagnose::diagnose_gamma;
use crate::error::Result;
use crate::ratings::RatingsDataset;
use crate::table::{Cell, ResultTable};

pub const MATCOMP_COLUMNS: &[&str] = &[
    "kind", "method", "rows", "cols", "r", "p", "lambda", "trial", "seed", "iterations", "rel_error",
    "rel_error_std", "rmse", "success", "status",
];

pub const CS_COLUMNS: &[&str] = &[
    "kind", "method", "m", "n", "s", "F", "L", "sigma", "lambda", "trial", "seed", "iterations", "outer",
    "rel_error", "rel_error_std", "sparsity", "success", "status",
];

/// Default iteration cap of the completion solvers.
pub const MATCOMP_MAX_ITER: usize = 1000;
/// Default heuristic multiplier `k`.
pub const DEFAULT_GAMMA_K: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrialStatus {
    Converged,
    MaxIter,
    Diverged,
    /// The solver returned an error; logged and kept as a row.
    Failed,
}

impl TrialStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialStatus::Converged => "converged",
            TrialStatus::MaxIter => "max_iter",
            TrialStatus::Diverged => "diverged",
            TrialStatus::Failed => "failed",
        }
    }
}

impl From<RunStatus> for TrialStatus {
    fn from(s: RunStatus) -> Self {
        match s {
            RunStatus::Converged => TrialStatus::Converged,
            RunStatus::MaxIter => TrialStatus::MaxIter,
            RunStatus::Diverged => TrialStatus::Diverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TrialRecord {
    status: TrialStatus,
    iterations: Option<usize>,
    outer: Option<usize>,
    rel_error: Option<f64>,
    rmse: Option<f64>,
    sparsity: Option<usize>,
    success: bool,
}

impl TrialRecord {
    fn failed(method: Method, err: impl std::fmt::Display) -> Self {
        log::warn!("{method}: {err}");
        Self {
            status: TrialStatus::Failed,
            iterations: None,
            outer: None,
            rel_error: None,
            rmse: None,
            sparsity: None,
            success: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub table: ResultTable,
    pub trials: usize,
    pub diverged: usize,
    pub failed: usize,
}

impl ExperimentReport {
    /// 0 when every trial finished, 2 when any diverged or failed.
    pub fn exit_code(&self) -> u8 {
        if self.diverged + self.failed > 0 {
            2
        } else {
            0
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.long_running {
        log::warn!("this configuration is long-running");
    }
    match cfg.task {
        Task::MatcompSynth => run_matcomp_synth(cfg),
        Task::MatcompRatings => run_matcomp_ratings(cfg),
        Task::CsRecovery | Task::CsNoise => run_cs(cfg),
        Task::Diagnose => {
            let table = diagnose_gamma(&cfg.diagnose)?.to_table(&cfg.diagnose);
            Ok(ExperimentReport { table, trials: 0, diverged: 0, failed: 0 })
        }
    }
}

/// Runs `jobs × trials` closures in parallel, returning results in job-major order.
fn run_jobs<J: Sync, T: Send>(jobs: &[J], trials: usize, f: impl Fn(&J, usize) -> T + Sync) -> Vec<Vec<T>> {
    let flat: Vec<T> = (0..jobs.len() * trials)
        .into_par_iter()
        .map(|k| f(&jobs[k / trials], k % trials))
        .collect();
    let mut it = flat.into_iter();
    (0..jobs.len()).map(|_| it.by_ref().take(trials).collect()).collect()
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (Some(mean), Some(std))
}

fn mean_of<T>(recs: &[TrialRecord], f: impl Fn(&TrialRecord) -> Option<T>) -> Option<f64>
where
    T: Into<f64>,
{
    let v: Vec<f64> = recs.iter().filter_map(|r| f(r).map(Into::into)).collect();
    mean_std(&v).0
}

fn usize_f64(v: usize) -> f64 {
    v as f64
}

fn worst_status(recs: &[TrialRecord]) -> TrialStatus {
    recs.iter().map(|r| r.status).max().unwrap_or(TrialStatus::Converged)
}

fn success_rate(recs: &[TrialRecord]) -> f64 {
    recs.iter().filter(|r| r.success).count() as f64 / recs.len() as f64
}

fn finish(table: ResultTable, groups: &[Vec<TrialRecord>]) -> ExperimentReport {
    let all = groups.iter().flatten();
    let count = |s: TrialStatus| groups.iter().flatten().filter(|r| r.status == s).count();
    ExperimentReport {
        trials: all.count(),
        diverged: count(TrialStatus::Diverged),
        failed: count(TrialStatus::Failed),
        table,
    }
}

// ---------------------------------------------------------------------------
// matrix completion

fn step_or(overrides: &SolverOverrides, beta: f64, drs: bool) -> dysplit::Result<StepSize> {
    if let Some(g) = overrides.gamma {
        return Ok(StepSize::Fixed(g));
    }
    let k = overrides.gamma_k.unwrap_or(DEFAULT_GAMMA_K);
    if drs {
        drs_step_policy(k)
    } else {
        dys_step_policy(beta, k)
    }
}

fn completion_rule(s: &SolverOverrides) -> dysplit::Result<StoppingRule> {
    let max_iter = s.max_iter.unwrap_or(MATCOMP_MAX_ITER);
    match s.tol {
        Some(t) => StoppingRule::masked_relative(t, max_iter),
        None => matcomp::default_rule(max_iter),
    }
}

fn solve_completion(method: Method, inst: &CompletionInstance, s: &SolverOverrides) -> dysplit::Result<CompletionResult> {
    let rule = completion_rule(s)?;
    match method {
        Method::Dys => {
            let beta = s.beta.unwrap_or(1.0);
            let problem = CompletionProblem::new(inst, inst.lambda, beta)?;
            matcomp::solve_splitting(inst, &problem, step_or(s, beta, false)?, &rule)
        }
        Method::Drs => matcomp::drs_complete(inst, step_or(s, 0.0, true)?, &rule),
        Method::Svp => svp_complete(inst, SvpStep::InverseSqrt, &rule),
        Method::Svt => svt_complete(inst, SvtParams::standard(inst), &rule),
        other => unreachable!("{other} is not a completion method"),
    }
}

fn completion_record(
    method: Method,
    inst: &CompletionInstance,
    s: &SolverOverrides,
    test: Option<&ObservationSet>,
    success_tol: Option<f64>,
) -> TrialRecord {
    let res = match solve_completion(method, inst, s) {
        Ok(r) => r,
        Err(e) => return TrialRecord::failed(method, e),
    };
    let status = TrialStatus::from(res.status);
    let (rel_error, rmse) = match test.filter(|t| !t.is_empty()) {
        Some(t) => (masked_relative_residual(&res.x_opt, t).ok(), matcomp::rmse(&res.x_opt, t).ok()),
        None => (res.relative_error, None),
    };
    let success = status == TrialStatus::Converged
        && match success_tol {
            Some(tol) => rel_error.is_some_and(|e| e < tol),
            None => true,
        };
    TrialRecord {
        status,
        iterations: Some(res.iterations),
        outer: None,
        rel_error,
        rmse,
        sparsity: None,
        success,
    }
}

struct MatcompPoint {
    rows: usize,
    cols: usize,
    r: usize,
    p: f64,
}

fn matcomp_rows(cfg: &ExperimentConfig, points: &[MatcompPoint], results: &[Vec<Vec<TrialRecord>>]) -> ExperimentReport {
    let mut table = ResultTable::new("matcomp", MATCOMP_COLUMNS);
    let mut groups = Vec::new();
    let lambda = cfg.matcomp.lambda;
    for (pt, trials) in points.iter().zip(results) {
        for (mi, method) in cfg.methods.iter().enumerate() {
            let recs: Vec<TrialRecord> = trials.iter().map(|per_method| per_method[mi].clone()).collect();
            let prefix = |kind: &str| {
                vec![
                    Cell::text(kind),
                    Cell::text(method.as_str()),
                    Cell::Int(pt.rows as u64),
                    Cell::Int(pt.cols as u64),
                    Cell::Int(pt.r as u64),
                    Cell::Float(pt.p),
                    Cell::Float(if *method == Method::Drs { 0.0 } else { lambda }),
                ]
            };
            for (t, rec) in recs.iter().enumerate() {
                let mut row = prefix("trial");
                row.extend([
                    Cell::Int(t as u64),
                    Cell::Int(RngSeed(cfg.seed).trial(t).0),
                    rec.iterations.map_or(Cell::Empty, |i| Cell::Int(i as u64)),
                    Cell::opt_float(rec.rel_error),
                    Cell::Empty,
                    Cell::opt_float(rec.rmse),
                    Cell::Int(rec.success as u64),
                    Cell::text(rec.status.as_str()),
                ]);
                table.push(row);
            }
            let errs: Vec<f64> = recs.iter().filter_map(|r| r.rel_error).collect();
            let (mean, std) = mean_std(&errs);
            let mut row = prefix("aggregate");
            row.extend([
                Cell::Empty,
                Cell::Empty,
                Cell::opt_float(mean_of(&recs, |r| r.iterations.map(usize_f64))),
                Cell::opt_float(mean),
                Cell::opt_float(std),
                Cell::opt_float(mean_of(&recs, |r| r.rmse)),
                Cell::Float(success_rate(&recs)),
                Cell::text(worst_status(&recs).as_str()),
            ]);
            table.push(row);
            groups.push(recs);
        }
    }
    finish(table, &groups)
}

fn run_matcomp_synth(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mc = &cfg.matcomp;
    let mut points = Vec::new();
    for &n in &mc.n {
        for &r in &mc.r {
            for &p in &mc.p {
                points.push(MatcompPoint { rows: n, cols: n, r, p });
            }
        }
    }
    let results = run_jobs(&points, cfg.trials, |pt, t| {
        let seed = RngSeed(cfg.seed).trial(t);
        let start = Instant::now();
        let recs: Vec<TrialRecord> = match CompletionInstance::synthetic(pt.rows, pt.r, pt.p, mc.lambda, seed) {
            Ok(inst) => cfg
                .methods
                .iter()
                .map(|&m| completion_record(m, &inst, &cfg.solver, None, Some(mc.success_tol)))
                .collect(),
            Err(e) => cfg.methods.iter().map(|&m| TrialRecord::failed(m, &e)).collect(),
        };
        log::info!("n={} r={} p={} trial {t}: {:.2?}", pt.rows, pt.r, pt.p, start.elapsed());
        recs
    });
    Ok(matcomp_rows(cfg, &points, &results))
}

fn run_matcomp_ratings(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mc = &cfg.matcomp;
    let path = mc.ratings.as_deref().expect("validated");
    let data = RatingsDataset::read(path)?;
    let splits = (0..cfg.trials)
        .map(|t| data.split(mc.test_fraction, RngSeed(cfg.seed).trial(t)))
        .collect::<Result<Vec<_>>>()?;
    let (rows, cols) = data.shape();
    let p = splits[0].train.sampling_ratio();
    let points: Vec<MatcompPoint> = mc
        .r
        .iter()
        .map(|&r| MatcompPoint { rows, cols, r, p })
        .collect();
    let results = run_jobs(&points, cfg.trials, |pt, t| {
        let split = &splits[t];
        match CompletionInstance::new(split.train.clone(), pt.r, mc.lambda) {
            Ok(inst) => cfg
                .methods
                .iter()
                .map(|&m| completion_record(m, &inst, &cfg.solver, Some(&split.test), None))
                .collect(),
            Err(e) => cfg.methods.iter().map(|&m| TrialRecord::failed(m, &e)).collect(),
        }
    });
    Ok(matcomp_rows(cfg, &points, &results))
}

// ---------------------------------------------------------------------------
// compressed sensing

struct CsPoint {
    m: usize,
    s: usize,
    sigma: f64,
}

fn sensing_rule(s: &SolverOverrides, max_iter: usize) -> dysplit::Result<StoppingRule> {
    StoppingRule::residual_pair(s.eps_abs.unwrap_or(cs::EPS_ABS), s.eps_rel.unwrap_or(cs::EPS_REL), max_iter)
}

fn solve_sensing(method: Method, inst: &SensingInstance, cfg: &ExperimentConfig) -> dysplit::Result<cs::RecoveryReport> {
    let s = &cfg.solver;
    match method {
        Method::Dys => {
            let beta = s.beta.unwrap_or(1.0);
            let problem = SparseProblem::l12(inst, beta)?;
            let step = match s.gamma {
                Some(g) => StepSize::Fixed(g),
                None => cs::dys_step_policy(inst, beta, s.gamma_k.unwrap_or(DEFAULT_GAMMA_K))?,
            };
            cs::dys_sparse(inst, &problem, step, &sensing_rule(s, s.max_iter.unwrap_or(cs::ADMM_MAX_ITER))?)
        }
        Method::Admm => {
            let lasso = inst.with_lambda(cfg.cs.lambda_lasso)?;
            cs::admm_lasso(&lasso, &sensing_rule(s, s.max_iter.unwrap_or(cs::ADMM_MAX_ITER))?)
        }
        Method::Dca => cs::dca_l12(inst, DcaOptions::default(), &sensing_rule(s, s.max_inner.unwrap_or(DCA_MAX_INNER))?),
        other => unreachable!("{other} is not a sensing method"),
    }
}

fn sensing_record(method: Method, inst: &SensingInstance, cfg: &ExperimentConfig) -> TrialRecord {
    match solve_sensing(method, inst, cfg) {
        Ok(rep) => TrialRecord {
            status: rep.status.into(),
            iterations: Some(rep.iterations),
            outer: (method == Method::Dca).then_some(rep.outer_iterations),
            rel_error: rep.relative_error(),
            rmse: None,
            sparsity: rep.evaluation.map(|e| e.sparsity),
            success: rep.success(),
        },
        Err(e) => TrialRecord::failed(method, e),
    }
}

fn run_cs(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let p = &cfg.cs;
    let mut points = Vec::new();
    for &m in &p.m {
        for &s in &p.s {
            for &sigma in &p.sigma {
                points.push(CsPoint { m, s, sigma });
            }
        }
    }
    let results = run_jobs(&points, cfg.trials, |pt, t| {
        let seed = RngSeed(cfg.seed).trial(t);
        let start = Instant::now();
        let recs: Vec<TrialRecord> =
            match SensingInstance::dct(pt.m, p.n, pt.s, p.refinement, p.min_sep(), pt.sigma, p.lambda_l12, seed) {
                Ok(inst) => cfg.methods.iter().map(|&m| sensing_record(m, &inst, cfg)).collect(),
                Err(e) => cfg.methods.iter().map(|&m| TrialRecord::failed(m, &e)).collect(),
            };
        log::info!("m={} s={} sigma={} trial {t}: {:.2?}", pt.m, pt.s, pt.sigma, start.elapsed());
        recs
    });

    let mut table = ResultTable::new("cs", CS_COLUMNS);
    let mut groups = Vec::new();
    for (pt, trials) in points.iter().zip(&results) {
        for (mi, method) in cfg.methods.iter().enumerate() {
            let recs: Vec<TrialRecord> = trials.iter().map(|per_method| per_method[mi].clone()).collect();
            let lambda = if *method == Method::Admm { p.lambda_lasso } else { p.lambda_l12 };
            let prefix = |kind: &str| {
                vec![
                    Cell::text(kind),
                    Cell::text(method.as_str()),
                    Cell::Int(pt.m as u64),
                    Cell::Int(p.n as u64),
                    Cell::Int(pt.s as u64),
                    Cell::Int(p.refinement as u64),
                    Cell::Int(p.min_sep() as u64),
                    Cell::Float(pt.sigma),
                    Cell::Float(lambda),
                ]
            };
            for (t, rec) in recs.iter().enumerate() {
                let mut row = prefix("trial");
                row.extend([
                    Cell::Int(t as u64),
                    Cell::Int(RngSeed(cfg.seed).trial(t).0),
                    rec.iterations.map_or(Cell::Empty, |i| Cell::Int(i as u64)),
                    rec.outer.map_or(Cell::Empty, |i| Cell::Int(i as u64)),
                    Cell::opt_float(rec.rel_error),
                    Cell::Empty,
                    rec.sparsity.map_or(Cell::Empty, |s| Cell::Int(s as u64)),
                    Cell::Int(rec.success as u64),
                    Cell::text(rec.status.as_str()),
                ]);
                table.push(row);
            }
            // error statistics over successful trials only
            let errs: Vec<f64> = recs.iter().filter(|r| r.success).filter_map(|r| r.rel_error).collect();
            let (mean, std) = mean_std(&errs);
            let mut row = prefix("aggregate");
            row.extend([
                Cell::Empty,
                Cell::Empty,
                Cell::opt_float(mean_of(&recs, |r| r.iterations.map(usize_f64))),
                Cell::opt_float(mean_of(&recs, |r| r.outer.map(usize_f64))),
                Cell::opt_float(mean),
                Cell::opt_float(std),
                Cell::opt_float(mean_of(&recs, |r| r.sparsity.map(usize_f64))),
                Cell::Float(success_rate(&recs)),
                Cell::text(worst_status(&recs).as_str()),
            ]);
            table.push(row);
            groups.push(recs);
        }
    }
    Ok(finish(table, &groups))
}
