//! Three-operator splitting for `min F + G + H`.
//!
//! One iteration with step size `γ`:
//!
//! ```text
//! y⁺ = prox_{γF}(x)
//! z⁺ = prox_{γG}(2y⁺ − γ∇H(y⁺) − x)
//! x⁺ = x + (z⁺ − y⁺)
//! ```
//!
//! With `H = 0` this is Douglas-Rachford, with `F = 0` forward-backward splitting.

mod diagnostics;
mod engine;
mod problem;
mod step;
mod stop;
mod trace;

pub use diagnostics::{energy, stationarity_bound};
pub use engine::{dys_step, run, RunOutcome, RunStatus, StepSize, DIVERGENCE_CAP};
pub use problem::{Constants, FnProblem, ProxFn, SplittingState, ThreeTermProblem};
pub use step::{adapt_gamma, lambda_threshold, max_step_size, StepSizePolicy};
pub use stop::{check_stop, StopMode, StoppingRule};
pub use trace::{RunTrace, TraceRecord, TRACE_CSV_HEADER};
