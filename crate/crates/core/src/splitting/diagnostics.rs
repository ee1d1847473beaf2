use ndarray::Zip;

use super::problem::{SplittingState, ThreeTermProblem};
use crate::error::{Error, Result};
use crate::linalg::dist2;

/// Energy (merit) function of the splitting iteration:
///
/// ```text
/// Θ_γ(x, y, z) = F(y) + G(z) + H(y)
///              + ‖2y − z − x − γ∇H(y)‖² / (2γ)
///              − ‖x − y + γ∇H(y)‖² / (2γ)
///              − ‖y − z‖² / γ
/// ```
///
/// Reduces to `F(y) + G(y) + H(y)` when `z = y`.
pub fn energy<P: ThreeTermProblem + ?Sized>(problem: &P, state: &SplittingState, gamma: f64) -> Result<f64> {
    let (x, y, z) = (state.x.view(), state.y.view(), state.z.view());
    let f = problem.value_f(y).ok_or(Error::DiagnosticsUnavailable("F"))?;
    let g = problem.value_g(z).ok_or(Error::DiagnosticsUnavailable("G"))?;
    let h = problem.value_h(y).ok_or(Error::DiagnosticsUnavailable("H"))?;
    let base = f + g + h;
    if !base.is_finite() {
        return Ok(base);
    }
    let grad = problem.grad_h(y);
    let mut first = 0.0;
    let mut second = 0.0;
    Zip::from(&x).and(&y).and(&z).and(&grad).for_each(|&xi, &yi, &zi, &gi| {
        let a = 2.0 * yi - zi - xi - gamma * gi;
        let b = xi - yi + gamma * gi;
        first += a * a;
        second += b * b;
    });
    let gap = dist2(y, z);
    Ok(base + (first - second) / (2.0 * gamma) - gap * gap / gamma)
}

/// Upper bound `(L + β + 1/γ)‖z − y‖` on `dist(0, ∇F(z) + ∂G(z) + ∇H(z))`.
pub fn stationarity_bound(state: &SplittingState, gamma: f64, lipschitz_f: f64, lipschitz_h: f64) -> f64 {
    (lipschitz_f + lipschitz_h + 1.0 / gamma) * dist2(state.z.view(), state.y.view())
}
