use ndarray::{Array1, Zip};

use super::diagnostics::energy;
use super::problem::{SplittingState, ThreeTermProblem};
use super::step::{adapt_gamma, StepSizePolicy};
use super::stop::{check_stop, StoppingRule};
use super::trace::{RunTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2, norm_inf};
use crate::prox::check_gamma;

/// Iterates with `‖y‖_∞` above this abort the run.
pub const DIVERGENCE_CAP: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    MaxIter,
    Diverged,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIter => "max_iter",
            RunStatus::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    Adaptive(StepSizePolicy),
}

impl StepSize {
    fn initial(&self) -> f64 {
        match self {
            StepSize::Fixed(g) => *g,
            StepSize::Adaptive(p) => p.initial_gamma(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Last finite state.
    pub state: SplittingState,
    pub trace: RunTrace,
    pub status: RunStatus,
    /// Step size in effect at the end of the run.
    pub gamma: f64,
}

/// One splitting iteration with step size `gamma`.
pub fn dys_step<P: ThreeTermProblem + ?Sized>(problem: &P, state: &SplittingState, gamma: f64) -> Result<SplittingState> {
    check_gamma(gamma)?;
    let wrap = |e: Error| Error::Oracle { iteration: state.t + 1, source: Box::new(e) };
    let y = problem.prox_f(state.x.view(), gamma).map_err(wrap)?;
    let grad = problem.grad_h(y.view());
    let mut v = Array1::zeros(y.len());
    Zip::from(&mut v)
        .and(&y)
        .and(&grad)
        .and(&state.x)
        .for_each(|v, &yi, &gi, &xi| *v = 2.0 * yi - gamma * gi - xi);
    let z = problem.prox_g(v.view(), gamma).map_err(wrap)?;
    if y.len() != state.x.len() || z.len() != state.x.len() {
        return Err(wrap(Error::Dimension(format!(
            "oracle returned lengths ({}, {}) for dimension {}",
            y.len(),
            z.len(),
            state.x.len()
        ))));
    }
    let mut x = state.x.clone();
    Zip::from(&mut x).and(&z).and(&y).for_each(|x, &zi, &yi| *x += zi - yi);
    Ok(SplittingState { x, y, z, t: state.t + 1 })
}

/// Runs the iteration from `y = z = x = x0` until `rule` is met, `max_iter`
/// is reached, or an iterate becomes non-finite.
pub fn run<P: ThreeTermProblem + ?Sized>(problem: &P, x0: Array1<f64>, step: StepSize, rule: &StoppingRule) -> Result<RunOutcome> {
    if x0.len() != problem.dim() {
        return Err(Error::Dimension(format!(
            "initial point has length {} but the problem has dimension {}",
            x0.len(),
            problem.dim()
        )));
    }
    let mut gamma = step.initial();
    check_gamma(gamma)?;
    let dims = problem.dim();
    let mut state = SplittingState::start(x0);
    let mut trace = RunTrace::default();
    let mut status = RunStatus::MaxIter;

    for _ in 0..rule.max_iter {
        let next = dys_step(problem, &state, gamma)?;
        let y_inf = norm_inf(next.y.view());
        if !next.is_finite() || y_inf > DIVERGENCE_CAP {
            log::warn!("iterate diverged at t = {}", next.t);
            status = RunStatus::Diverged;
            break;
        }
        let energy = match energy(problem, &next, gamma) {
            Ok(e) => Some(e),
            Err(Error::DiagnosticsUnavailable(_)) => None,
            Err(e) => return Err(e),
        };
        let zy_gap = dist2(next.z.view(), next.y.view());
        let record = TraceRecord {
            iter: next.t,
            gamma,
            energy,
            dy_norm: dist2(next.y.view(), state.y.view()),
            zy_gap,
            r_primal: zy_gap,
            s_dual: dist2(next.z.view(), state.z.view()) / gamma,
            x_norm: norm2(next.x.view()),
            y_norm: norm2(next.y.view()),
            z_norm: norm2(next.z.view()),
            dx_norm: dist2(next.x.view(), state.x.view()),
            x_prev_norm: norm2(state.x.view()),
            y_inf,
            monitor: problem.monitor(&next),
        };
        trace.push(record);
        state = next;
        if check_stop(rule, &trace, dims) {
            status = RunStatus::Converged;
            break;
        }
        if let StepSize::Adaptive(policy) = &step {
            let updated = adapt_gamma(policy, gamma, &trace);
            if updated != gamma {
                log::debug!("t = {}: step size {gamma:e} -> {updated:e}", state.t);
            }
            gamma = updated;
        }
    }
    Ok(RunOutcome { state, trace, status, gamma })
}
