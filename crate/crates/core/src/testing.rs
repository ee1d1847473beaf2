//! Random convex instances of `F + G + H` for property tests and benchmarks.
//!
//! `F(x) = ½xᵀQx + cᵀx`, `H(x) = ½xᵀPx + dᵀx` with `Q, P ⪰ 0`, and `G` either
//! `μ‖x‖₁` or the indicator of the box `[−1, 1]ⁿ`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{top_eigenvalue_gram, Cholesky};
use crate::prox::shrink;
use crate::splitting::{Constants, ThreeTermProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    L1(f64),
    Box,
}

/// Convex quadratic-plus-regularizer instance with exact value oracles.
#[derive(Debug, Clone)]
pub struct QuadraticInstance {
    pub q: Array2<f64>,
    pub c: Array1<f64>,
    pub p: Array2<f64>,
    pub d: Array1<f64>,
    pub g: Regularizer,
    constants: Constants,
}

fn random_psd(n: usize, top: f64, rng: &mut ChaCha8Rng) -> (Array2<f64>, f64) {
    let rank = rng.random_range(1..=n);
    let b = Array2::from_shape_simple_fn((rank, n), || StandardNormal.sample(rng));
    let raw = b.t().dot(&b);
    let lam = top_eigenvalue_gram(b.view(), 1e-14, 100_000, rng.random());
    let scaled = raw * (top / lam);
    // the power-iteration estimate can sit slightly below the true value
    let exact = top_eigenvalue_gram((b * (top / lam).sqrt()).view(), 1e-15, 100_000, 1);
    (scaled, exact.max(top))
}

impl QuadraticInstance {
    /// Instance of dimension `n` with `‖Q‖ ∈ [0.5, 2]` and `‖P‖ ∈ [0.05, 1]`.
    pub fn random(n: usize, g: Regularizer, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q, lip_f) = random_psd(n, rng.random_range(0.5..2.0), &mut rng);
        let (p, lip_h) = random_psd(n, rng.random_range(0.05..1.0), &mut rng);
        let c = Array1::from_shape_simple_fn(n, || StandardNormal.sample(&mut rng));
        let d = Array1::from_shape_simple_fn(n, || { let v: f64 = StandardNormal.sample(&mut rng); 0.5 * v });
        let constants = Constants::new(lip_f * (1.0 + 1e-12), 0.0, lip_h * (1.0 + 1e-12)).expect("valid constants");
        Self { q, c, p, d, g, constants }
    }

    pub fn objective(&self, x: ArrayView1<f64>) -> f64 {
        self.value_f(x).unwrap() + self.value_g(x).unwrap() + self.value_h(x).unwrap()
    }

    /// `∇F(x)`
    pub fn grad_f(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.q.dot(&x) + &self.c
    }
}

impl ThreeTermProblem for QuadraticInstance {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn prox_f(&self, x: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        let mut m = self.q.clone();
        m.diag_mut().mapv_inplace(|v| v + 1.0 / gamma);
        let rhs = &x / gamma - &self.c;
        Ok(Cholesky::factor(m.view())?.solve(&rhs))
    }

    fn prox_g(&self, v: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
        Ok(match self.g {
            Regularizer::L1(mu) => v.mapv(|t| shrink(t, gamma * mu)),
            Regularizer::Box => v.mapv(|t| t.clamp(-1.0, 1.0)),
        })
    }

    fn grad_h(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.p.dot(&y) + &self.d
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn value_f(&self, y: ArrayView1<f64>) -> Option<f64> {
        Some(0.5 * y.dot(&self.q.dot(&y)) + self.c.dot(&y))
    }

    fn value_g(&self, z: ArrayView1<f64>) -> Option<f64> {
        Some(match self.g {
            Regularizer::L1(mu) => mu * z.iter().map(|t| t.abs()).sum::<f64>(),
            Regularizer::Box => {
                if z.iter().all(|t| t.abs() <= 1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    fn value_h(&self, y: ArrayView1<f64>) -> Option<f64> {
        Some(0.5 * y.dot(&self.p.dot(&y)) + self.d.dot(&y))
    }
}
