//! Synthetic instances: low-rank matrices, uniform sampling masks,
//! oversampled DCT sensing matrices, separated sparse signals and noise.
//!
//! Every generator is a pure function of its parameters and seed.

mod io;

pub use io::{InstanceFile, InstanceItem};

use std::collections::HashSet;

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Seed wrapper; identical seeds give bit-identical instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent stream `tag` of this seed.
    pub fn rng(self, tag: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(tag);
        rng
    }

    /// Seed of trial `index` derived from a base seed.
    pub fn trial(self, index: usize) -> RngSeed {
        RngSeed(self.0.wrapping_add(index as u64))
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

const STREAM_LOW_RANK: u64 = 1;
const STREAM_OMEGA: u64 = 2;
const STREAM_DCT: u64 = 3;
const STREAM_SIGNAL: u64 = 4;
const STREAM_NOISE: u64 = 5;

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// `M = M_L M_Rᵀ` with i.i.d. standard Gaussian factors.
#[derive(Debug, Clone)]
pub struct LowRankSample {
    pub matrix: DenseMatrix,
    pub left: Array2<f64>,
    pub right: Array2<f64>,
}

/// `rows x cols` matrix of rank `r` from Gaussian factors.
pub fn gen_low_rank_rect(rows: usize, cols: usize, r: usize, seed: RngSeed) -> Result<LowRankSample> {
    if r == 0 || r > rows.min(cols) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", rows.min(cols))));
    }
    let mut rng = seed.rng(STREAM_LOW_RANK);
    let left = gaussian_matrix(rows, r, &mut rng);
    let right = gaussian_matrix(cols, r, &mut rng);
    let matrix = DenseMatrix::from_array(left.dot(&right.t()))?;
    Ok(LowRankSample { matrix, left, right })
}

/// Square `n x n` rank-`r` matrix.
pub fn gen_low_rank(n: usize, r: usize, seed: RngSeed) -> Result<LowRankSample> {
    gen_low_rank_rect(n, n, r, seed)
}

/// `m_count` distinct entries of a `rows x cols` grid, uniform over all subsets
/// of that size, returned in row-major order.
pub fn sample_omega(rows: usize, cols: usize, m_count: usize, seed: RngSeed) -> Result<Vec<(usize, usize)>> {
    let total = rows * cols;
    if m_count == 0 || m_count > total {
        return Err(Error::InvalidArgument(format!("cannot sample {m_count} of {total} entries")));
    }
    let mut rng = seed.rng(STREAM_OMEGA);
    let mut picked: Vec<usize> = index::sample(&mut rng, total, m_count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| (k / cols, k % cols)).collect())
}

/// Parameters of an oversampled DCT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DctSpec {
    pub m: usize,
    pub n: usize,
    /// Refinement factor `F ≥ 1`.
    pub refinement: usize,
    /// One `ξ ∈ [0, 1]^m` shared by all columns.
    pub xi: Array1<f64>,
}

impl DctSpec {
    pub fn new(m: usize, n: usize, refinement: usize, xi: Array1<f64>) -> Result<Self> {
        if refinement == 0 {
            return Err(Error::InvalidArgument("refinement factor must be >= 1".into()));
        }
        if xi.len() != m {
            return Err(Error::Dimension(format!("xi has length {} for m = {m}", xi.len())));
        }
        if xi.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("xi entries must lie in [0, 1]".into()));
        }
        Ok(Self { m, n, refinement, xi })
    }

    /// Draws `ξ ~ U([0, 1]^m)`.
    pub fn sample(m: usize, n: usize, refinement: usize, seed: RngSeed) -> Result<Self> {
        let mut rng = seed.rng(STREAM_DCT);
        let xi = Array1::from_shape_simple_fn(m, || rng.random::<f64>());
        Self::new(m, n, refinement, xi)
    }
}

/// Column `i = 1..=n` is `cos(2iπξ/F) / √m`.
pub fn gen_dct_matrix(spec: &DctSpec) -> DenseMatrix {
    let scale = 1.0 / (spec.m as f64).sqrt();
    let f = spec.refinement as f64;
    let a = Array2::from_shape_fn((spec.m, spec.n), |(row, col)| {
        let i = (col + 1) as f64;
        scale * (2.0 * i * std::f64::consts::PI * spec.xi[row] / f).cos()
    });
    DenseMatrix::from_array_unchecked(a)
}

/// `max_{i≠j} |⟨aᵢ, aⱼ⟩| / (‖aᵢ‖‖aⱼ‖)` over the columns of `a`.
pub fn mutual_coherence(a: &DenseMatrix) -> f64 {
    let arr = a.as_array();
    let gram = arr.t().dot(arr);
    let norms: Vec<f64> = gram.diag().iter().map(|v| v.sqrt()).collect();
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in (i + 1)..gram.ncols() {
            let denom = norms[i] * norms[j];
            if denom > 0.0 {
                worst = worst.max(gram[[i, j]].abs() / denom);
            }
        }
    }
    worst
}

const MAX_RESTARTS: usize = 10_000;

/// Support of size `s` with pairwise index gaps `≥ min_sep`, placed greedily at
/// random free positions and restarted whenever the free set runs out.
pub fn gen_support(n: usize, s: usize, min_sep: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!("sparsity {s} outside 1..={n}")));
    }
    let sep = min_sep.max(1);
    if s.saturating_mul(sep) > n {
        return Err(Error::InvalidArgument(format!(
            "{s} spikes with separation {sep} do not fit in length {n}"
        )));
    }
    for _ in 0..MAX_RESTARTS {
        let mut blocked = vec![false; n];
        let mut support = Vec::with_capacity(s);
        let mut free: Vec<usize> = (0..n).collect();
        while support.len() < s && !free.is_empty() {
            let pick = free[rng.random_range(0..free.len())];
            support.push(pick);
            let lo = pick.saturating_sub(sep - 1);
            let hi = (pick + sep - 1).min(n - 1);
            for b in &mut blocked[lo..=hi] {
                *b = true;
            }
            free.retain(|&k| !blocked[k]);
        }
        if support.len() == s {
            support.sort_unstable();
            return Ok(support);
        }
    }
    Err(Error::InvalidArgument(format!(
        "could not place {s} spikes with separation {sep} in length {n}"
    )))
}

/// Sparse vector with Gaussian values on a separated random support.
pub fn gen_sparse_signal(n: usize, s: usize, min_sep: usize, seed: RngSeed) -> Result<Array1<f64>> {
    let mut rng = seed.rng(STREAM_SIGNAL);
    let support = gen_support(n, s, min_sep, &mut rng)?;
    let mut x = Array1::zeros(n);
    for k in support {
        x[k] = StandardNormal.sample(&mut rng);
    }
    Ok(x)
}

/// `b + σ g` with `g` i.i.d. standard Gaussian.
pub fn add_noise(b: &Array1<f64>, sigma: f64, seed: RngSeed) -> Result<Array1<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(b.clone());
    }
    let mut rng = seed.rng(STREAM_NOISE);
    Ok(b.mapv(|v| {
        let g: f64 = StandardNormal.sample(&mut rng);
        v + sigma * g
    }))
}

/// Indices of the nonzero entries.
pub fn support_of(x: &Array1<f64>) -> HashSet<usize> {
    x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}
