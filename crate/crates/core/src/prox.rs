//! Proximal operators and smooth gradients shared by the solvers.
//!
//! `prox_{γf}(x) = argmin_u f(u) + ‖u − x‖² / (2γ)`.

use std::sync::{Arc, RwLock};

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Cholesky, DenseMatrix, ObservationSet, TruncatedSvd};

/// Step size and regularization weight of a proximal evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl ProxParams {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} must be finite and >= 0")));
        }
        Ok(Self { gamma, lambda })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step size {gamma} must be positive")))
    }
}

/// Componentwise `sign(v) max(|v| − κ, 0)`, the prox of `κ‖·‖₁`.
pub fn soft_threshold(v: ArrayView1<f64>, kappa: f64) -> Result<Array1<f64>> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {kappa} must be >= 0")));
    }
    Ok(v.mapv(|x| shrink(x, kappa)))
}

#[inline]
pub(crate) fn shrink(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// Projection onto `{X : rank(X) ≤ r}` via the top-`r` SVD.
pub fn rank_projection(y: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let out = TruncatedSvd::default().compute(y.view(), r)?.reconstruct();
    Ok(DenseMatrix::from_array_unchecked(out))
}

/// Prox of `½‖P_Ω(·) − P_Ω(M)‖²`: `(X_ij + γ M_ij) / (1 + γ)` on Ω, `X_ij` elsewhere.
pub fn prox_masked_quadratic(x: &DenseMatrix, obs: &ObservationSet, gamma: f64) -> Result<DenseMatrix> {
    check_gamma(gamma)?;
    if x.shape() != obs.shape() {
        return Err(Error::Dimension(format!(
            "matrix {:?} vs observation shape {:?}",
            x.shape(),
            obs.shape()
        )));
    }
    let mut out = x.as_array().clone();
    masked_quadratic_in_place(&mut out, obs, gamma);
    Ok(DenseMatrix::from_array_unchecked(out))
}

pub(crate) fn masked_quadratic_in_place(x: &mut Array2<f64>, obs: &ObservationSet, gamma: f64) {
    let w = 1.0 / (1.0 + gamma);
    for ((i, j), m) in obs.iter() {
        let v = &mut x[[i, j]];
        *v = (*v + gamma * m) * w;
    }
}

/// `∇(λ/2)‖X‖² = λX`.
pub fn grad_frobenius_reg(x: &DenseMatrix, lambda: f64) -> DenseMatrix {
    DenseMatrix::from_array_unchecked(x.as_array() * lambda)
}

/// Gradient of `−λ‖·‖₂`: `−λ y/‖y‖`, and `0` at the origin.
pub fn grad_neg_l2(y: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    let norm = norm2(y);
    if norm == 0.0 {
        Array1::zeros(y.len())
    } else {
        y.mapv(|v| -lambda * v / norm)
    }
}

enum Factor {
    /// `AAᵀ + I/γ`, used when A has fewer rows than columns.
    Rows(Cholesky),
    /// `AᵀA + I/γ`.
    Cols(Cholesky),
}

struct CachedFactor {
    gamma: f64,
    factor: Factor,
}

/// Prox of `½‖A· − b‖²`, i.e. the solution of `(AᵀA + I/γ) y = Aᵀb + x/γ`.
///
/// The factorization is cached for the last step size used. When `A` is wide the
/// system is solved through the smaller `m x m` matrix `AAᵀ + I/γ` as
/// `y = x + Aᵀ(AAᵀ + I/γ)⁻¹(b − Ax)`.
pub struct LeastSquaresProx {
    a: Array2<f64>,
    /// Row-major copy of `Aᵀ`; strided transposed products are much slower.
    at: Array2<f64>,
    b: Array1<f64>,
    atb: Array1<f64>,
    gram: Array2<f64>,
    cache: RwLock<Option<Arc<CachedFactor>>>,
}

impl LeastSquaresProx {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A has {} rows but b has length {}",
                a.nrows(),
                b.len()
            )));
        }
        let at = a.t().as_standard_layout().into_owned();
        let atb = at.dot(&b);
        let gram = if a.nrows() < a.ncols() { a.dot(&at) } else { at.dot(&a) };
        Ok(Self { a, at, b, atb, gram, cache: RwLock::new(None) })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.b
    }

    /// `Aᵀb`.
    pub fn atb(&self) -> &Array1<f64> {
        &self.atb
    }

    /// `½‖Ax − b‖²`.
    pub fn value(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.a.dot(&x) - &self.b;
        0.5 * r.dot(&r)
    }

    /// `Aᵀ(Ax − b)`.
    pub fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let r = self.a.dot(&x) - &self.b;
        self.at.dot(&r)
    }

    fn factor(&self, gamma: f64) -> Result<Arc<CachedFactor>> {
        if let Some(hit) = self.cache.read().expect("cache poisoned").as_ref() {
            if hit.gamma == gamma {
                return Ok(Arc::clone(hit));
            }
        }
        let mut shifted = self.gram.clone();
        let c = 1.0 / gamma;
        shifted.diag_mut().mapv_inplace(|d| d + c);
        let chol = Cholesky::factor(shifted.view())?;
        let factor = if self.a.nrows() < self.a.ncols() { Factor::Rows(chol) } else { Factor::Cols(chol) };
        let entry = Arc::new(CachedFactor { gamma, factor });
        *self.cache.write().expect("cache poisoned") = Some(Arc::clone(&entry));
        Ok(entry)
    }

    /// Solves with `rhs_extra` added to `Aᵀb`: `(AᵀA + I/γ) y = Aᵀb + rhs_extra + x/γ`.
    pub fn solve_shifted(&self, x: ArrayView1<f64>, extra: Option<ArrayView1<f64>>, gamma: f64) -> Result<Array1<f64>> {
        check_gamma(gamma)?;
        if x.len() != self.a.ncols() {
            return Err(Error::Dimension(format!(
                "point has length {} but A has {} columns",
                x.len(),
                self.a.ncols()
            )));
        }
        let cached = self.factor(gamma)?;
        let c = 1.0 / gamma;
        let y = match &cached.factor {
            Factor::Rows(chol) => {
                // (AᵀA + cI)⁻¹(Aᵀb + e + cx) = x + e/c − Aᵀ K⁻¹ A e / c + Aᵀ K⁻¹ (b − Ax)
                let mut y = x.to_owned();
                let residual = &self.b - &self.a.dot(&x);
                y += &self.at.dot(&chol.solve(&residual));
                if let Some(e) = extra {
                    let ae = self.a.dot(&e);
                    let corr = self.at.dot(&chol.solve(&ae));
                    y += &((&e - &corr) * gamma);
                }
                y
            }
            Factor::Cols(chol) => {
                let mut rhs = &self.atb + &(&x * c);
                if let Some(e) = extra {
                    rhs += &e;
                }
                chol.solve(&rhs)
            }
        };
        Ok(y)
    }

    pub fn prox(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        self.solve_shifted(x, None, gamma)
    }
}

impl std::fmt::Debug for LeastSquaresProx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LeastSquaresProx").field("shape", &self.a.dim()).finish()
    }
}

/// One-shot `(AᵀA + I/γ)⁻¹(Aᵀb + x/γ)`.
pub fn prox_least_squares(a: &DenseMatrix, b: ArrayView1<f64>, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
    LeastSquaresProx::new(a.as_array().clone(), b.to_owned())?.prox(x, gamma)
}
