use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// Iterate triple `(x, y, z)` after `t` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingState {
    pub x: Array1<f64>,
    pub y: Array1<f64>,
    pub z: Array1<f64>,
    pub t: usize,
}

impl SplittingState {
    /// Starting state with `y = z = x`.
    pub fn start(x0: Array1<f64>) -> Self {
        Self { y: x0.clone(), z: x0.clone(), x: x0, t: 0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.y, &self.z].iter().all(|v| v.iter().all(|e| e.is_finite()))
    }
}

/// Smoothness constants of the three terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Lipschitz constant `L` of ∇F.
    pub lipschitz_f: f64,
    /// Weak-convexity modulus `l`: `F + (l/2)‖·‖²` is convex.
    pub weak_convexity: f64,
    /// Lipschitz constant `β` of ∇H.
    pub lipschitz_h: f64,
}

impl Constants {
    pub fn new(lipschitz_f: f64, weak_convexity: f64, lipschitz_h: f64) -> Result<Self> {
        if !(lipschitz_f > 0.0 && lipschitz_f.is_finite()) {
            return Err(Error::InvalidArgument(format!("L = {lipschitz_f} must be positive")));
        }
        if !(lipschitz_h >= 0.0 && lipschitz_h.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta = {lipschitz_h} must be >= 0")));
        }
        if !(weak_convexity <= lipschitz_f) {
            return Err(Error::InvalidArgument(format!(
                "weak-convexity modulus {weak_convexity} exceeds L = {lipschitz_f}"
            )));
        }
        Ok(Self { lipschitz_f, weak_convexity, lipschitz_h })
    }

    /// Uses `l = L`, valid for any F with an L-Lipschitz gradient.
    pub fn uncertified(lipschitz_f: f64, lipschitz_h: f64) -> Result<Self> {
        Self::new(lipschitz_f, lipschitz_f, lipschitz_h)
    }
}

/// Oracle bundle for `F + G + H`.
///
/// Prox oracles must be deterministic. Value oracles are optional; when one is
/// missing the energy diagnostics report unavailability instead of a value.
pub trait ThreeTermProblem {
    fn dim(&self) -> usize;

    fn prox_f(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>>;

    fn prox_g(&self, v: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>>;

    fn grad_h(&self, y: ArrayView1<f64>) -> Array1<f64>;

    fn constants(&self) -> Constants;

    fn value_f(&self, _y: ArrayView1<f64>) -> Option<f64> {
        None
    }

    fn value_g(&self, _z: ArrayView1<f64>) -> Option<f64> {
        None
    }

    fn value_h(&self, _y: ArrayView1<f64>) -> Option<f64> {
        None
    }

    /// Problem-specific residual for [`StopMode::MaskedRelative`](super::StopMode).
    fn monitor(&self, _state: &SplittingState) -> Option<f64> {
        None
    }
}

pub type ProxFn = Box<dyn Fn(ArrayView1<f64>, f64) -> Result<Array1<f64>> + Send + Sync>;
type GradFn = Box<dyn Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync>;
type ValueFn = Box<dyn Fn(ArrayView1<f64>) -> f64 + Send + Sync>;

/// Closure-backed problem. Unset oracles default to the zero function
/// (identity prox, zero gradient) without a value oracle.
pub struct FnProblem {
    dim: usize,
    constants: Constants,
    prox_f: Option<ProxFn>,
    prox_g: Option<ProxFn>,
    grad_h: Option<GradFn>,
    value_f: Option<ValueFn>,
    value_g: Option<ValueFn>,
    value_h: Option<ValueFn>,
}

impl FnProblem {
    pub fn new(dim: usize, constants: Constants) -> Self {
        Self {
            dim,
            constants,
            prox_f: None,
            prox_g: None,
            grad_h: None,
            value_f: None,
            value_g: None,
            value_h: None,
        }
    }

    pub fn with_prox_f(mut self, f: impl Fn(ArrayView1<f64>, f64) -> Result<Array1<f64>> + Send + Sync + 'static) -> Self {
        self.prox_f = Some(Box::new(f));
        self
    }

    pub fn with_prox_g(mut self, f: impl Fn(ArrayView1<f64>, f64) -> Result<Array1<f64>> + Send + Sync + 'static) -> Self {
        self.prox_g = Some(Box::new(f));
        self
    }

    pub fn with_grad_h(mut self, f: impl Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync + 'static) -> Self {
        self.grad_h = Some(Box::new(f));
        self
    }

    pub fn with_value_f(mut self, f: impl Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static) -> Self {
        self.value_f = Some(Box::new(f));
        self
    }

    pub fn with_value_g(mut self, f: impl Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static) -> Self {
        self.value_g = Some(Box::new(f));
        self
    }

    pub fn with_value_h(mut self, f: impl Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static) -> Self {
        self.value_h = Some(Box::new(f));
        self
    }

    /// Value oracles returning zero for every term left unset.
    pub fn with_zero_values(mut self) -> Self {
        if self.value_f.is_none() && self.prox_f.is_none() {
            self.value_f = Some(Box::new(|_| 0.0));
        }
        if self.value_g.is_none() && self.prox_g.is_none() {
            self.value_g = Some(Box::new(|_| 0.0));
        }
        if self.value_h.is_none() && self.grad_h.is_none() {
            self.value_h = Some(Box::new(|_| 0.0));
        }
        self
    }
}

impl ThreeTermProblem for FnProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prox_f(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        match &self.prox_f {
            Some(f) => f(x, gamma),
            None => Ok(x.to_owned()),
        }
    }

    fn prox_g(&self, v: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        match &self.prox_g {
            Some(f) => f(v, gamma),
            None => Ok(v.to_owned()),
        }
    }

    fn grad_h(&self, y: ArrayView1<f64>) -> Array1<f64> {
        match &self.grad_h {
            Some(f) => f(y),
            None => Array1::zeros(y.len()),
        }
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn value_f(&self, y: ArrayView1<f64>) -> Option<f64> {
        self.value_f.as_ref().map(|f| f(y))
    }

    fn value_g(&self, z: ArrayView1<f64>) -> Option<f64> {
        self.value_g.as_ref().map(|f| f(z))
    }

    fn value_h(&self, y: ArrayView1<f64>) -> Option<f64> {
        self.value_h.as_ref().map(|f| f(y))
    }
}
