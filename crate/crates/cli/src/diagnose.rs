//! Step-size report: the threshold `γ₀`, the recommended fixed step and the
//! descent coefficient `Λ(γ)` over a logarithmic grid.

use dysplit::splitting::{lambda_threshold, max_step_size};

use crate::config::DiagnoseParams;
use crate::error::Result;
use crate::table::{Cell, ResultTable};

pub const DIAGNOSE_COLUMNS: &[&str] = &["kind", "lipschitz_f", "weak_convexity", "beta", "gamma", "lambda"];

/// Fraction of `γ₀` recommended as a fixed step.
pub const RECOMMENDED_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub gamma0: f64,
    pub recommended: f64,
    /// `(γ, Λ(γ))` pairs in increasing `γ`.
    pub grid: Vec<(f64, f64)>,
}

pub fn diagnose_gamma(params: &DiagnoseParams) -> Result<GammaReport> {
    let (l, w, b) = (params.lipschitz_f, params.weak_convexity, params.beta);
    let gamma0 = max_step_size(l, w, b)?;
    let ratio = params.grid_max / params.grid_min;
    let last = params.grid_points - 1;
    let grid = (0..params.grid_points)
        .map(|i| {
            let g = match i {
                0 => params.grid_min,
                i if i == last => params.grid_max,
                i => params.grid_min * ratio.powf(i as f64 / last as f64),
            };
            (g, lambda_threshold(g, l, w, b))
        })
        .collect();
    Ok(GammaReport { gamma0, recommended: RECOMMENDED_FRACTION * gamma0, grid })
}

impl GammaReport {
    pub fn to_table(&self, params: &DiagnoseParams) -> ResultTable {
        let mut t = ResultTable::new("diagnose", DIAGNOSE_COLUMNS);
        let (l, w, b) = (params.lipschitz_f, params.weak_convexity, params.beta);
        let mut row = |kind: &str, g: f64| {
            t.push(vec![
                Cell::text(kind),
                Cell::Float(l),
                Cell::Float(w),
                Cell::Float(b),
                Cell::Float(g),
                Cell::Float(lambda_threshold(g, l, w, b)),
            ])
        };
        row("threshold", self.gamma0);
        row("recommended", self.recommended);
        for &(g, _) in &self.grid {
            row("grid", g);
        }
        t
    }
}
