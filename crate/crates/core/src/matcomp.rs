//! Low-rank matrix completion.
//!
//! Solvers for `min ½‖P_Ω(X) − P_Ω(M)‖² + I_{rank ≤ r}(X) + (λ/2)‖X‖²`:
//! three-operator splitting ([`dys_complete`]), its `λ = 0` Douglas–Rachford
//! case ([`drs_complete`]), singular value projection ([`svp_complete`]) and
//! singular value thresholding ([`svt_complete`]).

use std::sync::Mutex;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::datagen::{gen_low_rank_rect, sample_omega, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::{dist2, masked_residual_raw, norm2, DenseMatrix, ObservationSet, TruncatedSvd};
use crate::prox::{masked_quadratic_in_place, shrink};
use crate::splitting::{
    max_step_size, run, Constants, RunStatus, RunTrace, SplittingState, StepSize, StepSizePolicy,
    StoppingRule, ThreeTermProblem, TraceRecord, DIVERGENCE_CAP,
};

/// Observed entries `P_Ω(M)` together with the model parameters.
#[derive(Debug, Clone)]
pub struct CompletionInstance {
    pub obs: ObservationSet,
    pub rank: usize,
    pub lambda: f64,
    /// Ground truth, kept for error reporting only.
    pub truth: Option<DenseMatrix>,
}

impl CompletionInstance {
    pub fn new(obs: ObservationSet, rank: usize, lambda: f64) -> Result<Self> {
        let (rows, cols) = obs.shape();
        if obs.is_empty() {
            return Err(Error::InvalidArgument("no observed entries".into()));
        }
        if rank == 0 || rank > rows.min(cols) {
            return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={}", rows.min(cols))));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} must be >= 0")));
        }
        Ok(Self { obs, rank, lambda, truth: None })
    }

    pub fn with_truth(mut self, truth: DenseMatrix) -> Result<Self> {
        if truth.shape() != self.obs.shape() {
            return Err(Error::Dimension(format!(
                "truth {:?} vs observation shape {:?}",
                truth.shape(),
                self.obs.shape()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// `n x n` Gaussian rank-`r` matrix observed on `round(p n²)` uniform entries.
    pub fn synthetic(n: usize, r: usize, p: f64, lambda: f64, seed: RngSeed) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("sampling ratio {p} outside (0, 1]")));
        }
        let m = ((p * (n * n) as f64).round() as usize).max(1);
        let sample = gen_low_rank_rect(n, n, r, seed)?;
        let omega = sample_omega(n, n, m, seed)?;
        let obs = ObservationSet::from_matrix(&sample.matrix, omega)?;
        Self::new(obs, r, lambda)?.with_truth(sample.matrix)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.obs.shape()
    }

    /// `p = |Ω| / (rows · cols)`.
    pub fn sampling_ratio(&self) -> f64 {
        self.obs.sampling_ratio()
    }

    fn dim(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub x_opt: DenseMatrix,
    pub iterations: usize,
    /// `‖X_opt − M‖_F / ‖M‖_F` when the instance carries its ground truth.
    pub relative_error: Option<f64>,
    pub status: RunStatus,
    pub trace: RunTrace,
}

impl CompletionResult {
    fn finish(inst: &CompletionInstance, x: Array2<f64>, status: RunStatus, trace: RunTrace) -> Result<Self> {
        let x_opt = DenseMatrix::from_array_unchecked(x);
        let relative_error = match &inst.truth {
            Some(m) => Some(relative_error(&x_opt, m)?),
            None => None,
        };
        Ok(Self { iterations: trace.len(), x_opt, relative_error, status, trace })
    }
}

/// `F = ½‖P_Ω(X) − P_Ω(M)‖²`, `G = I_{rank ≤ r}`, `H = (λ/2)‖X‖²` on row-major
/// flattened matrices.
pub struct CompletionProblem<'a> {
    inst: &'a CompletionInstance,
    lambda: f64,
    constants: Constants,
    svd: TruncatedSvd,
    obs_norm: f64,
    values: bool,
    /// Right singular vectors of the previous projection.
    warm: Mutex<Option<Array2<f64>>>,
}

impl<'a> CompletionProblem<'a> {
    /// `beta` is the Lipschitz constant reported for `∇H`.
    pub fn new(inst: &'a CompletionInstance, lambda: f64, beta: f64) -> Result<Self> {
        let obs_norm = inst.obs.frobenius_norm();
        if obs_norm == 0.0 {
            return Err(Error::Degenerate("observed entries are all zero".into()));
        }
        Ok(Self {
            inst,
            lambda,
            constants: Constants::new(1.0, 0.0, beta)?,
            svd: TruncatedSvd::default(),
            obs_norm,
            values: false,
            warm: Mutex::new(None),
        })
    }

    pub fn with_svd(mut self, svd: TruncatedSvd) -> Self {
        self.svd = svd;
        self
    }

    /// Enables value oracles so the run records the energy.
    pub fn with_values(mut self) -> Self {
        self.values = true;
        self
    }

    fn as_matrix<'v>(&self, v: ArrayView1<'v, f64>) -> Result<ArrayView2<'v, f64>> {
        v.into_shape_with_order(self.inst.shape()).map_err(|e| Error::Dimension(e.to_string()))
    }
}

/// Rank-`r` projection seeded with a previous right basis; returns the new one.
fn warm_rank_projection(
    y: ArrayView2<f64>,
    r: usize,
    svd: &TruncatedSvd,
    warm: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let trip = svd.compute_warm(y, r, warm.map(|w| w.view()))?;
    Ok((trip.reconstruct(), trip.v))
}

fn flatten(a: Array2<f64>) -> Array1<f64> {
    let n = a.len();
    if a.is_standard_layout() {
        a.into_shape_with_order(n).expect("standard layout")
    } else {
        Array1::from_iter(a.iter().copied())
    }
}

impl ThreeTermProblem for CompletionProblem<'_> {
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    fn prox_f(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        let mut u = self.as_matrix(x)?.to_owned();
        masked_quadratic_in_place(&mut u, &self.inst.obs, gamma);
        Ok(flatten(u))
    }

    fn prox_g(&self, v: ArrayView1<f64>, _gamma: f64) -> Result<Array1<f64>> {
        let v = self.as_matrix(v)?;
        let mut warm = self.warm.lock().unwrap_or_else(|e| e.into_inner());
        let (out, basis) = warm_rank_projection(v, self.inst.rank, &self.svd, warm.as_ref())?;
        *warm = Some(basis);
        Ok(flatten(out))
    }

    fn grad_h(&self, y: ArrayView1<f64>) -> Array1<f64> {
        y.mapv(|v| self.lambda * v)
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn value_f(&self, y: ArrayView1<f64>) -> Option<f64> {
        if !self.values {
            return None;
        }
        let y = self.as_matrix(y).ok()?.to_owned();
        Some(0.5 * masked_residual_raw(&y, &self.inst.obs).powi(2))
    }

    fn value_g(&self, _z: ArrayView1<f64>) -> Option<f64> {
        // z is always the output of the rank projection
        self.values.then_some(0.0)
    }

    fn value_h(&self, y: ArrayView1<f64>) -> Option<f64> {
        self.values.then(|| 0.5 * self.lambda * y.dot(&y))
    }

    fn monitor(&self, state: &SplittingState) -> Option<f64> {
        let z = self.as_matrix(state.z.view()).ok()?.to_owned();
        Some(masked_residual_raw(&z, &self.inst.obs) / self.obs_norm)
    }
}

/// Default step size for [`dys_complete`]: `γ₀` from `(L, l, β) = (1, 0, beta)`
/// with the decay heuristic started at `k γ₀`.
pub fn dys_step_policy(beta: f64, k: f64) -> Result<StepSize> {
    Ok(StepSize::Adaptive(StepSizePolicy::new(max_step_size(1.0, 0.0, beta)?, k)?))
}

/// Default step size for [`drs_complete`]: the Douglas–Rachford threshold
/// `γ₀ = √(3/2) − 1` for `L = 1` with the same heuristic.
pub fn drs_step_policy(k: f64) -> Result<StepSize> {
    dys_step_policy(0.0, k)
}

/// Masked relative residual `< 1e-4`.
pub fn default_rule(max_iter: usize) -> Result<StoppingRule> {
    StoppingRule::masked_relative(1e-4, max_iter)
}

/// Three-operator splitting from `X⁰ = 0`:
///
/// ```text
/// U = (X + γM)/(1 + γ) on Ω, X elsewhere
/// V = P_r((2 − γλ)U − X)
/// X = X + V − U
/// ```
///
/// The returned matrix is the rank-`r` iterate `V`.
pub fn dys_complete(inst: &CompletionInstance, step: StepSize, rule: &StoppingRule) -> Result<CompletionResult> {
    let problem = CompletionProblem::new(inst, inst.lambda, 1.0)?;
    solve_splitting(inst, &problem, step, rule)
}

/// [`dys_complete`] with `λ = 0`.
pub fn drs_complete(inst: &CompletionInstance, step: StepSize, rule: &StoppingRule) -> Result<CompletionResult> {
    let problem = CompletionProblem::new(inst, 0.0, 0.0)?;
    solve_splitting(inst, &problem, step, rule)
}

/// Runs the splitting engine on an explicitly configured problem.
pub fn solve_splitting(
    inst: &CompletionInstance,
    problem: &CompletionProblem<'_>,
    step: StepSize,
    rule: &StoppingRule,
) -> Result<CompletionResult> {
    let out = run(problem, Array1::zeros(inst.dim()), step, rule)?;
    let z = out
        .state
        .z
        .into_shape_with_order(inst.shape())
        .map_err(|e| Error::Dimension(e.to_string()))?;
    CompletionResult::finish(inst, z, out.status, out.trace)
}

/// Step size schedule of [`svp_complete`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvpStep {
    /// `η_t = 1/(p√t)`.
    InverseSqrt,
    Constant(f64),
}

impl SvpStep {
    fn eta(&self, p: f64, t: usize) -> f64 {
        match self {
            SvpStep::InverseSqrt => 1.0 / (p * (t as f64).sqrt()),
            SvpStep::Constant(eta) => *eta,
        }
    }
}

fn divergent(x: &Array2<f64>) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_CAP)
}

fn monitor_record(t: usize, x: &Array2<f64>, prev: &Array2<f64>, residual: f64) -> TraceRecord {
    let xv = x.view().into_shape_with_order(x.len()).ok();
    let pv = prev.view().into_shape_with_order(prev.len()).ok();
    let (dx, xn, pn) = match (xv, pv) {
        (Some(a), Some(b)) => (dist2(a, b), norm2(a), norm2(b)),
        _ => (f64::NAN, f64::NAN, f64::NAN),
    };
    TraceRecord {
        iter: t,
        dx_norm: dx,
        x_norm: xn,
        x_prev_norm: pn,
        monitor: Some(residual),
        ..TraceRecord::default()
    }
}

/// Singular value projection from `X⁰ = 0`:
/// `X⁺ = P_r(X − η_t P_Ω(X − M))`.
pub fn svp_complete(inst: &CompletionInstance, eta: SvpStep, rule: &StoppingRule) -> Result<CompletionResult> {
    let svd = TruncatedSvd::default();
    let p = inst.sampling_ratio();
    let obs_norm = inst.obs.frobenius_norm();
    if obs_norm == 0.0 {
        return Err(Error::Degenerate("observed entries are all zero".into()));
    }
    let mut x = Array2::<f64>::zeros(inst.shape());
    let mut basis: Option<Array2<f64>> = None;
    let mut trace = RunTrace::default();
    let mut status = RunStatus::MaxIter;
    for t in 1..=rule.max_iter {
        let step = eta.eta(p, t);
        let mut y = x.clone();
        for ((i, j), m) in inst.obs.iter() {
            y[[i, j]] -= step * (x[[i, j]] - m);
        }
        let (next, b) = warm_rank_projection(y.view(), inst.rank, &svd, basis.as_ref())?;
        basis = Some(b);
        if divergent(&next) {
            status = RunStatus::Diverged;
            break;
        }
        let residual = masked_residual_raw(&next, &inst.obs) / obs_norm;
        let mut rec = monitor_record(t, &next, &x, residual);
        rec.gamma = step;
        trace.push(rec);
        x = next;
        if residual < rule.eps_rel {
            status = RunStatus::Converged;
            break;
        }
    }
    CompletionResult::finish(inst, x, status, trace)
}

/// The dual iterate's trailing spectrum is nearly flat, so singular values
/// settle to about 1e-9 relative change at best.
pub const SVT_SVD_TOL: f64 = 1e-8;

/// Parameters of [`svt_complete`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvtParams {
    pub tau: f64,
    pub delta: f64,
    /// Rank increment while searching for the last singular value above `τ`.
    pub rank_step: usize,
    pub svd: TruncatedSvd,
}

impl SvtParams {
    /// `τ = 5n` with `n = max(rows, cols)`, `δ = 1.2/p` and SVD tolerance
    /// [`SVT_SVD_TOL`].
    pub fn standard(inst: &CompletionInstance) -> Self {
        let (r, c) = inst.shape();
        Self {
            tau: 5.0 * r.max(c) as f64,
            delta: 1.2 / inst.sampling_ratio(),
            rank_step: 5,
            svd: TruncatedSvd::with_tol(SVT_SVD_TOL),
        }
    }
}

/// `Σ_j (σ_j − τ)₊ u_j v_jᵀ`, growing the number of computed triplets until
/// one falls at or below `τ`. Returns the shrunk matrix, its rank and the
/// computed right singular vectors (usable as a warm start).
pub fn singular_value_shrink(
    x: ArrayView2<f64>,
    tau: f64,
    start_rank: usize,
    rank_step: usize,
    svd: &TruncatedSvd,
    warm: Option<ArrayView2<f64>>,
) -> Result<(Array2<f64>, usize, Array2<f64>)> {
    let max_rank = x.nrows().min(x.ncols());
    let mut k = start_rank.clamp(1, max_rank);
    loop {
        let trip = svd.compute_warm(x, k, warm)?;
        let below = trip.s.iter().any(|&s| s <= tau);
        if below || k == max_rank {
            let rank = trip.s.iter().filter(|&&s| s > tau).count();
            return Ok((trip.reconstruct_with(|s| shrink(s, tau)), rank, trip.v));
        }
        k = (k + rank_step.max(1)).min(max_rank);
    }
}

/// Singular value thresholding from the zero dual variable:
///
/// ```text
/// Y = shrink_τ(X)
/// X = X + δ P_Ω(M − Y)   (zero off Ω)
/// ```
///
/// The returned matrix is `Y`.
pub fn svt_complete(inst: &CompletionInstance, params: SvtParams, rule: &StoppingRule) -> Result<CompletionResult> {
    let obs_norm = inst.obs.frobenius_norm();
    if obs_norm == 0.0 {
        return Err(Error::Degenerate("observed entries are all zero".into()));
    }
    let mut state = SvtState::new(inst);
    let mut trace = RunTrace::default();
    let mut status = RunStatus::MaxIter;
    for t in 1..=rule.max_iter {
        let prev = state.y.clone();
        svt_step(inst, &params, &mut state)?;
        if divergent(&state.y) || divergent(&state.dual) {
            state.y = prev;
            status = RunStatus::Diverged;
            break;
        }
        let residual = masked_residual_raw(&state.y, &inst.obs) / obs_norm;
        trace.push(monitor_record(t, &state.y, &prev, residual));
        if residual < rule.eps_rel {
            status = RunStatus::Converged;
            break;
        }
    }
    CompletionResult::finish(inst, state.y, status, trace)
}

/// Iterates of [`svt_complete`].
#[derive(Debug, Clone)]
pub struct SvtState {
    /// Dual variable, zero off Ω.
    pub dual: Array2<f64>,
    /// Shrunk primal iterate.
    pub y: Array2<f64>,
    pub rank: usize,
    basis: Option<Array2<f64>>,
}

impl SvtState {
    pub fn new(inst: &CompletionInstance) -> Self {
        Self {
            dual: Array2::zeros(inst.shape()),
            y: Array2::zeros(inst.shape()),
            rank: 0,
            basis: None,
        }
    }
}

/// One shrinkage step followed by the dual update on Ω.
pub fn svt_step(inst: &CompletionInstance, params: &SvtParams, state: &mut SvtState) -> Result<()> {
    if !(params.tau > 0.0 && params.delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau {} and delta {} must be positive",
            params.tau, params.delta
        )));
    }
    let warm = state.basis.as_ref().map(|b| b.view());
    let (y, rank, basis) =
        singular_value_shrink(state.dual.view(), params.tau, state.rank + 1, params.rank_step, &params.svd, warm)?;
    for ((i, j), m) in inst.obs.iter() {
        state.dual[[i, j]] += params.delta * (m - y[[i, j]]);
    }
    state.y = y;
    state.rank = rank;
    state.basis = Some(basis);
    Ok(())
}

/// `‖X − M‖_F / ‖M‖_F`.
pub fn relative_error(x: &DenseMatrix, m: &DenseMatrix) -> Result<f64> {
    if x.shape() != m.shape() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", x.shape(), m.shape())));
    }
    let denom = m.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::Degenerate("reference matrix is zero".into()));
    }
    let diff = (x.as_array() - m.as_array()).mapv(|v| v * v).sum().sqrt();
    Ok(diff / denom)
}

/// Root mean squared error over the entries of `test`.
pub fn rmse(x: &DenseMatrix, test: &ObservationSet) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if x.shape() != test.shape() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", x.shape(), test.shape())));
    }
    let sq = masked_residual_raw(x.as_array(), test).powi(2);
    Ok((sq / test.len() as f64).sqrt())
}

pub const RESULT_CSV_HEADER: &str = "method,n,r,p,lambda,iterations,rel_error,status";

/// One line of the results table (without trailing newline). `n` is the row
/// count; a missing relative error is written as an empty field.
pub fn result_csv_row(method: &str, inst: &CompletionInstance, res: &CompletionResult) -> String {
    let err = res.relative_error.map(|e| format!("{e:e}")).unwrap_or_default();
    format!(
        "{method},{},{},{},{:e},{},{err},{}",
        inst.shape().0,
        inst.rank,
        inst.sampling_ratio(),
        inst.lambda,
        res.iterations,
        res.status
    )
}
