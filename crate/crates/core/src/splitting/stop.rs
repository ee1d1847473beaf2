use super::trace::RunTrace;
use crate::error::{Error, Result};

/// Which quantity decides convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// `‖r‖ ≤ √n ε_abs + ε_rel max(‖y‖, ‖z‖)` and `‖s‖ ≤ √n ε_abs + ε_rel ‖x‖`,
    /// with `r = y − z` and `s = (z − z_prev)/γ`.
    ResidualPair,
    /// The problem's monitor value (e.g. masked relative residual) `< ε_rel`.
    MaskedRelative,
    /// `‖x − x_prev‖ / max(‖x_prev‖, 1) < ε_rel`.
    IterateChange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub mode: StopMode,
}

impl StoppingRule {
    pub fn new(mode: StopMode, eps_abs: f64, eps_rel: f64, max_iter: usize) -> Result<Self> {
        if !(eps_abs > 0.0 && eps_rel > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive (abs {eps_abs}, rel {eps_rel})"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        Ok(Self { eps_abs, eps_rel, max_iter, mode })
    }

    pub fn residual_pair(eps_abs: f64, eps_rel: f64, max_iter: usize) -> Result<Self> {
        Self::new(StopMode::ResidualPair, eps_abs, eps_rel, max_iter)
    }

    /// Monitor `< threshold`; `eps_abs` is unused in this mode.
    pub fn masked_relative(threshold: f64, max_iter: usize) -> Result<Self> {
        Self::new(StopMode::MaskedRelative, threshold, threshold, max_iter)
    }

    pub fn iterate_change(threshold: f64, max_iter: usize) -> Result<Self> {
        Self::new(StopMode::IterateChange, threshold, threshold, max_iter)
    }

    /// Right-hand side of the primal residual test.
    pub fn primal_tolerance(&self, dims: usize, y_norm: f64, z_norm: f64) -> f64 {
        (dims as f64).sqrt() * self.eps_abs + self.eps_rel * y_norm.max(z_norm)
    }

    /// Right-hand side of the dual residual test.
    pub fn dual_tolerance(&self, dims: usize, x_norm: f64) -> f64 {
        (dims as f64).sqrt() * self.eps_abs + self.eps_rel * x_norm
    }
}

/// True iff the latest record satisfies the rule's convergence test.
pub fn check_stop(rule: &StoppingRule, trace: &RunTrace, dims: usize) -> bool {
    let Some(last) = trace.last() else {
        return false;
    };
    match rule.mode {
        StopMode::ResidualPair => {
            last.r_primal <= rule.primal_tolerance(dims, last.y_norm, last.z_norm)
                && last.s_dual <= rule.dual_tolerance(dims, last.x_norm)
        }
        StopMode::MaskedRelative => last.monitor.is_some_and(|m| m < rule.eps_rel),
        StopMode::IterateChange => last.dx_norm / last.x_prev_norm.max(1.0) < rule.eps_rel,
    }
}
