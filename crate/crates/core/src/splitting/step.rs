use super::trace::RunTrace;
use crate::error::{Error, Result};

/// Descent coefficient of the energy function:
///
/// `Λ(γ) = ½(1/γ − l) − β − (1/γ + β/2)[(−1 + 2γl) + (1 + γL)²]`.
///
/// The energy decreases by at least `Λ(γ)‖y⁺ − y‖²` per iteration when `Λ(γ) > 0`.
pub fn lambda_threshold(gamma: f64, lipschitz_f: f64, weak_convexity: f64, lipschitz_h: f64) -> f64 {
    let (l_big, l, beta) = (lipschitz_f, weak_convexity, lipschitz_h);
    let inv = 1.0 / gamma;
    let bracket = (-1.0 + 2.0 * gamma * l) + (1.0 + gamma * l_big).powi(2);
    0.5 * (inv - l) - beta - (inv + 0.5 * beta) * bracket
}

const SCAN_LO: f64 = 1e-12;
const SCAN_HI: f64 = 1e3;
const SCAN_RATIO: f64 = 1.001;

/// Smallest positive root `γ₀` of `Λ`; every `γ ∈ (0, γ₀)` has `Λ(γ) > 0`.
pub fn max_step_size(lipschitz_f: f64, weak_convexity: f64, lipschitz_h: f64) -> Result<f64> {
    let lam = |g: f64| lambda_threshold(g, lipschitz_f, weak_convexity, lipschitz_h);
    if !(lam(SCAN_LO) > 0.0) {
        return Err(Error::NoStepSizeRoot);
    }
    let mut lo = SCAN_LO;
    let mut hi = lo;
    let mut bracketed = false;
    while hi < SCAN_HI {
        hi = (lo * SCAN_RATIO).min(SCAN_HI);
        if !(lam(hi) > 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
    }
    if !bracketed {
        return Err(Error::NoStepSizeRoot);
    }
    // invariant: Λ(lo) > 0 ≥ Λ(hi)
    for _ in 0..200 {
        if lam(lo) <= 1e-10 || hi - lo <= 4.0 * f64::EPSILON * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if lam(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Step-size decay heuristic: start at `k γ₀` and halve (never below
/// `decay_floor · γ₀`) while the iterates move too fast or grow too large.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizePolicy {
    pub gamma0: f64,
    pub k: f64,
    pub decay_floor: f64,
    pub divergence_speed: f64,
    pub magnitude_cap: f64,
}

impl StepSizePolicy {
    pub fn new(gamma0: f64, k: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma0 = {gamma0} must be positive")));
        }
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("k = {k} must be >= 1")));
        }
        Ok(Self {
            gamma0,
            k,
            decay_floor: 0.9999,
            divergence_speed: 1000.0,
            magnitude_cap: 1e10,
        })
    }

    pub fn initial_gamma(&self) -> f64 {
        self.k * self.gamma0
    }
}

/// Applies one step of the decay heuristic using the latest trace record.
pub fn adapt_gamma(policy: &StepSizePolicy, gamma: f64, trace: &RunTrace) -> f64 {
    if gamma <= policy.gamma0 {
        return gamma;
    }
    let Some(last) = trace.last() else {
        return gamma;
    };
    let t = last.iter.max(1) as f64;
    let too_fast = last.dy_norm > policy.divergence_speed / t;
    let too_large = last.y_inf > policy.magnitude_cap;
    if too_fast || too_large {
        (gamma / 2.0).max(policy.decay_floor * policy.gamma0)
    } else {
        gamma
    }
}
