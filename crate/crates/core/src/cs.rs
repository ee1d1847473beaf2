//! Sparse recovery from linear measurements.
//!
//! * [`admm_lasso`]: ADMM on `½‖Ax − b‖² + λ‖x‖₁`.
//! * [`dca_l12`]: difference-of-convex iterations on `½‖Ax − b‖² + λ(‖x‖₁ − ‖x‖₂)`,
//!   each subproblem solved by the same ADMM.
//! * [`dys_l12`]: three-operator splitting on the same objective with
//!   `F = ½‖A· − b‖²`, `G = λ‖·‖₁`, `H = −λ‖·‖₂`.

use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::{Array1, ArrayView1};

use crate::datagen::{add_noise, gen_dct_matrix, gen_sparse_signal, DctSpec, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2, top_eigenvalue_gram, DenseMatrix};
use crate::prox::{grad_neg_l2, shrink, soft_threshold, LeastSquaresProx};
use crate::splitting::{
    max_step_size, run, Constants, RunStatus, RunTrace, StepSize, StepSizePolicy, StoppingRule,
    ThreeTermProblem, TraceRecord,
};

pub const ADMM_LAMBDA: f64 = 1e-6;
pub const L12_LAMBDA: f64 = 1e-5;
pub const DEFAULT_RHO: f64 = 1e-5;
pub const EPS_ABS: f64 = 1e-7;
pub const EPS_REL: f64 = 1e-5;
pub const ADMM_MAX_ITER: usize = 50_000;
pub const DCA_MAX_OUTER: usize = 10;
pub const DCA_MAX_INNER: usize = 5_000;
pub const DCA_OUTER_TOL: f64 = 1e-2;
/// Entries below this magnitude count as zero when scoring a recovery.
pub const TRUNCATION: f64 = 5e-6;
/// Relative error below which a recovery counts as a success.
pub const SUCCESS_TOL: f64 = 1e-4;

/// How a synthetic DCT instance was generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingMeta {
    pub sparsity: usize,
    pub refinement: usize,
    pub min_sep: usize,
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SensingInstance {
    pub a: DenseMatrix,
    pub b: Array1<f64>,
    pub x_true: Option<Array1<f64>>,
    pub lambda: f64,
    pub rho: f64,
    pub meta: Option<SensingMeta>,
}

impl SensingInstance {
    pub fn new(a: DenseMatrix, b: Array1<f64>, lambda: f64, rho: f64) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::Dimension(format!("A has {} rows but b has length {}", a.rows(), b.len())));
        }
        if b.iter().all(|&v| v == 0.0) {
            return Err(Error::Degenerate("measurement vector is zero".into()));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("measurements must be finite".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} must be >= 0")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho {rho} must be positive")));
        }
        Ok(Self { a, b, x_true: None, lambda, rho, meta: None })
    }

    pub fn with_truth(mut self, x_true: Array1<f64>) -> Result<Self> {
        if x_true.len() != self.a.cols() {
            return Err(Error::Dimension(format!(
                "x_true has length {} but A has {} columns",
                x_true.len(),
                self.a.cols()
            )));
        }
        self.x_true = Some(x_true);
        Ok(self)
    }

    /// Same data with a different regularization weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut out = Self::new(self.a.clone(), self.b.clone(), lambda, self.rho)?;
        out.x_true = self.x_true.clone();
        out.meta = self.meta;
        Ok(out)
    }

    /// Oversampled DCT matrix, `s`-sparse signal with spikes at least `min_sep`
    /// apart, and `b = A x̄ + σ g`.
    #[allow(clippy::too_many_arguments)]
    pub fn dct(m: usize, n: usize, s: usize, refinement: usize, min_sep: usize, sigma: f64, lambda: f64, seed: RngSeed) -> Result<Self> {
        let a = gen_dct_matrix(&DctSpec::sample(m, n, refinement, seed)?);
        let x = gen_sparse_signal(n, s, min_sep, seed)?;
        let clean = a.as_array().dot(&x);
        let b = add_noise(&clean, sigma, seed)?;
        let mut inst = Self::new(a, b, lambda, DEFAULT_RHO)?.with_truth(x)?;
        inst.meta = Some(SensingMeta { sparsity: s, refinement, min_sep, sigma, seed: seed.0 });
        Ok(inst)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.a.shape()
    }

    fn least_squares(&self) -> Result<LeastSquaresProx> {
        LeastSquaresProx::new(self.a.as_array().clone(), self.b.clone())
    }

    /// `½‖Ax − b‖² + λ‖x‖₁`.
    pub fn lasso_objective(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.a.as_array().dot(&x) - &self.b;
        0.5 * r.dot(&r) + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `½‖Ax − b‖² + λ(‖x‖₁ − ‖x‖₂)`.
    pub fn l12_objective(&self, x: ArrayView1<f64>) -> f64 {
        self.lasso_objective(x) - self.lambda * norm2(x)
    }
}

/// Score of a recovered signal against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub relative_error: f64,
    pub success: bool,
    pub sparsity: usize,
}

/// Zeroes entries below [`TRUNCATION`], then reports `‖x − x̄‖/‖x̄‖`, the
/// success flag and the number of remaining nonzeros.
pub fn evaluate(x_opt: ArrayView1<f64>, x_true: ArrayView1<f64>) -> Result<Evaluation> {
    if x_opt.len() != x_true.len() {
        return Err(Error::Dimension(format!("{} vs {}", x_opt.len(), x_true.len())));
    }
    let denom = norm2(x_true);
    if denom == 0.0 {
        return Err(Error::Degenerate("ground truth is zero".into()));
    }
    let truncated = truncate(x_opt);
    let relative_error = dist2(truncated.view(), x_true) / denom;
    Ok(Evaluation {
        relative_error,
        success: relative_error < SUCCESS_TOL,
        sparsity: truncated.iter().filter(|&&v| v != 0.0).count(),
    })
}

fn truncate(x: ArrayView1<f64>) -> Array1<f64> {
    x.mapv(|v| if v.abs() < TRUNCATION { 0.0 } else { v })
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub x_opt: Array1<f64>,
    /// Present when the instance carries its ground truth.
    pub evaluation: Option<Evaluation>,
    pub iterations: usize,
    pub status: RunStatus,
    /// DCA outer iterations; 0 for the single-loop solvers.
    pub outer_iterations: usize,
    /// Iterations in which `y = 0` and the zero-gradient convention was used.
    pub zero_gradient_hits: usize,
    pub trace: RunTrace,
}

impl RecoveryReport {
    fn build(inst: &SensingInstance, x_opt: Array1<f64>, iterations: usize, status: RunStatus, trace: RunTrace) -> Result<Self> {
        let evaluation = match &inst.x_true {
            Some(t) => Some(evaluate(x_opt.view(), t.view())?),
            None => None,
        };
        Ok(Self { x_opt, evaluation, iterations, status, outer_iterations: 0, zero_gradient_hits: 0, trace })
    }

    pub fn success(&self) -> bool {
        self.evaluation.is_some_and(|e| e.success)
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.evaluation.map(|e| e.relative_error)
    }
}

/// `‖r‖ ≤ √n ε_abs + ε_rel max(‖y‖, ‖z‖)`, `‖s‖ ≤ √n ε_abs + ε_rel ‖x‖`.
pub fn default_rule(max_iter: usize) -> Result<StoppingRule> {
    StoppingRule::residual_pair(EPS_ABS, EPS_REL, max_iter)
}

/// ADMM iterate in scaled form: `y` primal, `z` sparse copy, `u` scaled dual.
#[derive(Debug, Clone)]
struct AdmmState {
    y: Array1<f64>,
    z: Array1<f64>,
    u: Array1<f64>,
}

impl AdmmState {
    fn zeros(n: usize) -> Self {
        Self { y: Array1::zeros(n), z: Array1::zeros(n), u: Array1::zeros(n) }
    }
}

/// Runs ADMM on `½‖Ax − b‖² − ⟨e, x⟩ + λ‖x‖₁` from `state`:
///
/// ```text
/// y = (AᵀA + ρI)⁻¹(Aᵀb + e + ρ(z − u))
/// z = S_{λ/ρ}(y + u)
/// u = u + y − z
/// ```
fn admm_core(
    ls: &LeastSquaresProx,
    lambda: f64,
    rho: f64,
    extra: Option<ArrayView1<f64>>,
    state: &mut AdmmState,
    rule: &StoppingRule,
    trace: &mut RunTrace,
) -> Result<(usize, RunStatus)> {
    let n = state.y.len();
    let gamma = 1.0 / rho;
    let kappa = lambda / rho;
    let offset = trace.len();
    for k in 1..=rule.max_iter {
        let v = &state.z - &state.u;
        let y = ls.solve_shifted(v.view(), extra, gamma)?;
        let z = (&y + &state.u).mapv(|t| shrink(t, kappa));
        let u = &state.u + &y - &z;
        if ![&y, &z, &u].iter().all(|a| a.iter().all(|t| t.is_finite())) {
            return Ok((k - 1, RunStatus::Diverged));
        }
        let r = dist2(y.view(), z.view());
        let rec = TraceRecord {
            iter: offset + k,
            gamma,
            dy_norm: dist2(y.view(), state.y.view()),
            zy_gap: r,
            r_primal: r,
            s_dual: rho * dist2(z.view(), state.z.view()),
            // unscaled dual ρu
            x_norm: rho * norm2(u.view()),
            y_norm: norm2(y.view()),
            z_norm: norm2(z.view()),
            dx_norm: rho * dist2(u.view(), state.u.view()),
            x_prev_norm: rho * norm2(state.u.view()),
            y_inf: y.iter().fold(0.0_f64, |m, t| m.max(t.abs())),
            ..TraceRecord::default()
        };
        *state = AdmmState { y, z, u };
        let done = rec.r_primal <= rule.primal_tolerance(n, rec.y_norm, rec.z_norm)
            && rec.s_dual <= rule.dual_tolerance(n, rec.x_norm);
        trace.push(rec);
        if done {
            return Ok((k, RunStatus::Converged));
        }
    }
    Ok((rule.max_iter, RunStatus::MaxIter))
}

/// ADMM-Lasso from zero. Returns the sparse iterate `z`.
pub fn admm_lasso(inst: &SensingInstance, rule: &StoppingRule) -> Result<RecoveryReport> {
    let ls = inst.least_squares()?;
    let mut state = AdmmState::zeros(inst.a.cols());
    let mut trace = RunTrace::default();
    let (iters, status) = admm_core(&ls, inst.lambda, inst.rho, None, &mut state, rule, &mut trace)?;
    RecoveryReport::build(inst, state.z, iters, status, trace)
}

/// Outer-loop settings of [`dca_l12`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcaOptions {
    pub max_outer: usize,
    /// Stop once `‖yᵗ⁺¹ − yᵗ‖ / max(‖yᵗ‖, 1)` falls below this.
    pub outer_tol: f64,
    /// Start each inner solve from the previous one instead of zero.
    pub warm_start: bool,
}

impl Default for DcaOptions {
    fn default() -> Self {
        Self { max_outer: DCA_MAX_OUTER, outer_tol: DCA_OUTER_TOL, warm_start: true }
    }
}

/// DCA for the ℓ₁₋₂ model: each outer step linearizes `−λ‖x‖₂` at `yᵗ`
/// (gradient `−λ yᵗ/‖yᵗ‖`, taken as 0 at `yᵗ = 0`) and solves the resulting
/// Lasso-type subproblem by ADMM. Starts from `y⁰ = 0`; returns the sparse
/// ADMM iterate of the last subproblem.
pub fn dca_l12(inst: &SensingInstance, opts: DcaOptions, inner_rule: &StoppingRule) -> Result<RecoveryReport> {
    if opts.max_outer == 0 {
        return Err(Error::InvalidArgument("max_outer must be >= 1".into()));
    }
    let n = inst.a.cols();
    let ls = inst.least_squares()?;
    let mut outer = Array1::<f64>::zeros(n);
    let mut state = AdmmState::zeros(n);
    let mut trace = RunTrace::default();
    let mut total = 0;
    let mut status = RunStatus::MaxIter;
    let mut zero_hits = 0;
    let mut outer_done = 0;
    for _ in 0..opts.max_outer {
        let norm = norm2(outer.view());
        if norm == 0.0 {
            zero_hits += 1;
        }
        let extra = if norm == 0.0 { None } else { Some(outer.mapv(|v| inst.lambda * v / norm)) };
        if !opts.warm_start {
            state = AdmmState::zeros(n);
        }
        let (iters, inner_status) =
            admm_core(&ls, inst.lambda, inst.rho, extra.as_ref().map(|e| e.view()), &mut state, inner_rule, &mut trace)?;
        total += iters;
        outer_done += 1;
        if inner_status == RunStatus::Diverged {
            status = RunStatus::Diverged;
            break;
        }
        let change = dist2(state.y.view(), outer.view()) / norm.max(1.0);
        outer = state.y.clone();
        if change < opts.outer_tol {
            status = RunStatus::Converged;
            break;
        }
    }
    let mut report = RecoveryReport::build(inst, state.z, total, status, trace)?;
    report.outer_iterations = outer_done;
    report.zero_gradient_hits = zero_hits;
    Ok(report)
}

/// `F = ½‖A· − b‖²`, `G = λ‖·‖₁` and, unless disabled, `H = −λ‖·‖₂`.
pub struct SparseProblem {
    ls: LeastSquaresProx,
    lambda: f64,
    concave: bool,
    constants: Constants,
    zero_hits: AtomicUsize,
}

impl SparseProblem {
    /// ℓ₁₋₂ model. `beta` is the Lipschitz constant reported for `∇H`
    /// (which has none globally); `L` is the top eigenvalue of `AᵀA`.
    pub fn l12(inst: &SensingInstance, beta: f64) -> Result<Self> {
        Self::build(inst, true, beta)
    }

    /// Lasso split with `H = 0`.
    pub fn lasso(inst: &SensingInstance) -> Result<Self> {
        Self::build(inst, false, 0.0)
    }

    fn build(inst: &SensingInstance, concave: bool, beta: f64) -> Result<Self> {
        let lipschitz = gram_norm(inst);
        if lipschitz == 0.0 {
            return Err(Error::Degenerate("sensing matrix is zero".into()));
        }
        Ok(Self {
            ls: inst.least_squares()?,
            lambda: inst.lambda,
            concave,
            constants: Constants::new(lipschitz, 0.0, beta)?,
            zero_hits: AtomicUsize::new(0),
        })
    }

    pub fn zero_gradient_hits(&self) -> usize {
        self.zero_hits.load(Ordering::Relaxed)
    }
}

/// Largest eigenvalue of `AᵀA`.
pub fn gram_norm(inst: &SensingInstance) -> f64 {
    top_eigenvalue_gram(inst.a.view(), 1e-12, 10_000, 0x1a2b)
}

impl ThreeTermProblem for SparseProblem {
    fn dim(&self) -> usize {
        self.ls.matrix().ncols()
    }

    fn prox_f(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        self.ls.prox(x, gamma)
    }

    fn prox_g(&self, v: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        soft_threshold(v, gamma * self.lambda)
    }

    fn grad_h(&self, y: ArrayView1<f64>) -> Array1<f64> {
        if !self.concave {
            return Array1::zeros(y.len());
        }
        if y.iter().all(|&v| v == 0.0) {
            self.zero_hits.fetch_add(1, Ordering::Relaxed);
        }
        grad_neg_l2(y, self.lambda)
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn value_f(&self, y: ArrayView1<f64>) -> Option<f64> {
        Some(self.ls.value(y))
    }

    fn value_g(&self, z: ArrayView1<f64>) -> Option<f64> {
        Some(self.lambda * z.iter().map(|v| v.abs()).sum::<f64>())
    }

    fn value_h(&self, y: ArrayView1<f64>) -> Option<f64> {
        Some(if self.concave { -self.lambda * norm2(y) } else { 0.0 })
    }
}

/// Decay heuristic started at `k γ₀`, with `γ₀` the threshold for
/// `(L, 0, beta)` and `L = ‖A‖₂²`.
pub fn dys_step_policy(inst: &SensingInstance, beta: f64, k: f64) -> Result<StepSize> {
    let gamma0 = max_step_size(gram_norm(inst), 0.0, beta)?;
    Ok(StepSize::Adaptive(StepSizePolicy::new(gamma0, k)?))
}

/// Three-operator splitting on the ℓ₁₋₂ model from `x⁰ = 0`:
///
/// ```text
/// y = (AᵀA + I/γ)⁻¹(Aᵀb + x/γ)
/// z = S_{γλ}(2y + γλ y/‖y‖ − x)
/// x = x + z − y
/// ```
///
/// Returns the sparse iterate `z`.
pub fn dys_l12(inst: &SensingInstance, step: StepSize, rule: &StoppingRule) -> Result<RecoveryReport> {
    let problem = SparseProblem::l12(inst, 1.0)?;
    dys_sparse(inst, &problem, step, rule)
}

/// Runs the splitting engine on an explicitly configured sparse problem.
pub fn dys_sparse(inst: &SensingInstance, problem: &SparseProblem, step: StepSize, rule: &StoppingRule) -> Result<RecoveryReport> {
    let out = run(problem, Array1::zeros(inst.a.cols()), step, rule)?;
    let iters = out.trace.len();
    let mut report = RecoveryReport::build(inst, out.state.z, iters, out.status, out.trace)?;
    report.zero_gradient_hits = problem.zero_gradient_hits();
    Ok(report)
}

pub const REPORT_CSV_HEADER: &str = "method,m,n,s,F,sigma,seed,success,rel_error,sparsity,iterations";

/// One results line (without newline). Metadata fields are empty for
/// instances not built by [`SensingInstance::dct`].
pub fn report_csv_row(method: &str, inst: &SensingInstance, report: &RecoveryReport) -> String {
    let (m, n) = inst.dims();
    let (s, f, sigma, seed) = match inst.meta {
        Some(meta) => (
            meta.sparsity.to_string(),
            meta.refinement.to_string(),
            meta.sigma.to_string(),
            meta.seed.to_string(),
        ),
        None => Default::default(),
    };
    let (success, err, sparsity) = match report.evaluation {
        Some(e) => (e.success.to_string(), format!("{:e}", e.relative_error), e.sparsity.to_string()),
        None => (String::new(), String::new(), String::new()),
    };
    format!("{method},{m},{n},{s},{f},{sigma},{seed},{success},{err},{sparsity},{}", report.iterations)
}
