use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{orthonormalize, DenseMatrix};
use crate::error::{Error, Result};

/// Default relative tolerance on the singular values of the randomized solver.
pub const DEFAULT_SVD_TOL: f64 = 1e-10;

/// Singular triplet `(U, S, V)` with `A ≈ U diag(S) Vᵀ`.
///
/// `s` is nonincreasing and the columns of `u` and `v` are orthonormal.
#[derive(Debug, Clone)]
pub struct SvdTriplet {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

impl SvdTriplet {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.rank());
        self.u = self.u.slice(s![.., ..k]).to_owned();
        self.v = self.v.slice(s![.., ..k]).to_owned();
        self.s = self.s.slice(s![..k]).to_owned();
        self
    }

    /// `U diag(S) Vᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut us = self.u.clone();
        for (mut col, &sv) in us.axis_iter_mut(Axis(1)).zip(self.s.iter()) {
            col *= sv;
        }
        us.dot(&self.v.t())
    }

    /// `U diag(f(S)) Vᵀ`, skipping triplets where `f` returns zero.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let kept: Vec<(usize, f64)> = self
            .s
            .iter()
            .enumerate()
            .map(|(j, &sv)| (j, f(sv)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        if kept.is_empty() {
            return Array2::zeros((m, n));
        }
        let mut us = Array2::zeros((m, kept.len()));
        let mut vs = Array2::zeros((n, kept.len()));
        for (c, &(j, w)) in kept.iter().enumerate() {
            us.column_mut(c).assign(&(&self.u.column(j) * w));
            vs.column_mut(c).assign(&self.v.column(j));
        }
        us.dot(&vs.t())
    }
}

/// Configuration of the truncated SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSvd {
    /// Stop once the leading singular values change by less than `tol * σ₁`.
    pub tol: f64,
    pub oversampling: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Use the dense solver when `min(rows, cols)` is at most this.
    pub dense_cutoff: usize,
}

impl Default for TruncatedSvd {
    fn default() -> Self {
        Self {
            tol: DEFAULT_SVD_TOL,
            oversampling: 8,
            max_iter: 500,
            seed: 0x5eed_5eed,
            dense_cutoff: 64,
        }
    }
}

impl TruncatedSvd {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn compute(&self, a: ArrayView2<f64>, k: usize) -> Result<SvdTriplet> {
        self.compute_warm(a, k, None)
    }

    /// Like [`compute`](Self::compute), seeding the subspace iteration with the
    /// columns of `start` (right singular vector guesses, `cols(a)` rows). Extra
    /// columns up to `k + oversampling` are random.
    pub fn compute_warm(&self, a: ArrayView2<f64>, k: usize, start: Option<ArrayView2<f64>>) -> Result<SvdTriplet> {
        let (m, n) = a.dim();
        let min_dim = m.min(n);
        if k == 0 || k > min_dim {
            return Err(Error::InvalidArgument(format!(
                "rank {k} outside 1..={min_dim}"
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if min_dim <= self.dense_cutoff || k + self.oversampling >= min_dim {
            return Ok(dense_svd_view(a).truncate(k));
        }
        if let Some(s) = &start {
            if s.nrows() != n {
                return Err(Error::Dimension(format!("warm start has {} rows, expected {n}", s.nrows())));
            }
        }
        self.subspace_iteration(a, k, start)
    }

    /// Block subspace iteration with `k + oversampling` random columns.
    pub fn randomized(&self, a: ArrayView2<f64>, k: usize) -> Result<SvdTriplet> {
        self.subspace_iteration(a, k, None)
    }

    fn subspace_iteration(&self, a: ArrayView2<f64>, k: usize, start: Option<ArrayView2<f64>>) -> Result<SvdTriplet> {
        let (m, n) = a.dim();
        let l = (k + self.oversampling).min(m.min(n));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut omega = Array2::from_shape_simple_fn((n, l), || StandardNormal.sample(&mut rng));
        if let Some(s) = start {
            let c = s.ncols().min(l);
            omega.slice_mut(s![.., ..c]).assign(&s.slice(s![.., ..c]));
        }
        let mut q = orthonormalize(a.dot(&omega));
        let mut prev: Option<Array1<f64>> = None;
        let mut change = f64::INFINITY;
        for iter in 0..self.max_iter {
            // B = Qᵀ A, so Bᵀ = Aᵀ Q
            let bt = a.t().dot(&q);
            let small = dense_svd_view(bt.view());
            // Bᵀ = W S Zᵀ  =>  A ≈ Q Z S Wᵀ
            let sv = small.s.slice(s![..k]).to_owned();
            let top = sv[0];
            if top == 0.0 {
                return Ok(finish(&q, small, k));
            }
            if let Some(p) = &prev {
                change = p
                    .iter()
                    .zip(sv.iter())
                    .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
                    / top;
                if change < self.tol && iter >= 2 {
                    return Ok(finish(&q, small, k));
                }
            }
            prev = Some(sv);
            let z = orthonormalize(bt);
            q = orthonormalize(a.dot(&z));
        }
        Err(Error::SvdNotConverged { iterations: self.max_iter, residual: change })
    }
}

fn finish(q: &Array2<f64>, small: SvdTriplet, k: usize) -> SvdTriplet {
    // small is the SVD of Bᵀ: Bᵀ = small.u * S * small.vᵀ
    let small = small.truncate(k);
    SvdTriplet {
        u: q.dot(&small.v),
        s: small.s,
        v: small.u,
    }
}

/// Top-`k` singular triplet with the default configuration.
pub fn truncated_svd(a: &DenseMatrix, k: usize, tol: f64) -> Result<SvdTriplet> {
    TruncatedSvd::with_tol(tol).compute(a.view(), k)
}

/// Full thin SVD by one-sided Jacobi rotations.
pub fn dense_svd(a: &DenseMatrix) -> SvdTriplet {
    dense_svd_view(a.view())
}

pub(crate) fn dense_svd_view(a: ArrayView2<f64>) -> SvdTriplet {
    let (m, n) = a.dim();
    if m >= n {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(a.t());
        SvdTriplet { u: t.v, s: t.s, v: t.u }
    }
}

// One-sided Jacobi on an m x n matrix with m >= n. Columns of A are stored as
// rows of `w` so that rotations touch contiguous memory.
fn jacobi_tall(a: ArrayView2<f64>) -> SvdTriplet {
    let (m, n) = a.dim();
    let mut w = a.t().to_owned();
    let mut v = Array2::<f64>::eye(n);
    const MAX_SWEEPS: usize = 80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let wp = w.row(p);
                    let wq = w.row(q);
                    (wp.dot(&wp), wq.dot(&wq), wp.dot(&wq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate_rows(&mut w, p, q, c, sn);
                rotate_rows(&mut v, p, q, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = w.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let top = order.first().map(|&i| norms[i]).unwrap_or(0.0);

    let mut u = Array2::<f64>::zeros((m, n));
    let mut vv = Array2::<f64>::zeros((n, n));
    let mut s = Array1::<f64>::zeros(n);
    let mut deficient = Vec::new();
    for (c, &idx) in order.iter().enumerate() {
        s[c] = norms[idx];
        // v is stored transposed as well: row idx of `v` is the right vector
        vv.column_mut(c).assign(&v.row(idx));
        if norms[idx] > top * f64::EPSILON * (m as f64) && norms[idx] > 0.0 {
            u.column_mut(c).assign(&(&w.row(idx) / norms[idx]));
        } else {
            deficient.push(c);
        }
    }
    if !deficient.is_empty() {
        complete_basis(&mut u, &deficient);
    }
    SvdTriplet { u, s, v: vv }
}

fn rotate_rows(w: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let (mut top, mut bottom) = w.view_mut().split_at(Axis(0), q);
    let mut rp = top.row_mut(p);
    let mut rq = bottom.row_mut(0);
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

// Fills the listed columns of `u` with unit vectors orthogonal to all other columns.
fn complete_basis(u: &mut Array2<f64>, missing: &[usize]) {
    let m = u.nrows();
    let mut candidate = 0usize;
    for &c in missing {
        loop {
            let mut e = Array1::<f64>::zeros(m);
            e[candidate % m] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.ncols() {
                    if j == c {
                        continue;
                    }
                    let col = u.column(j);
                    let d = col.dot(&e);
                    e.scaled_add(-d, &col);
                }
            }
            let norm = e.dot(&e).sqrt();
            if norm > 1e-8 {
                u.column_mut(c).assign(&(e / norm));
                break;
            }
            if candidate > 2 * m {
                break;
            }
        }
    }
}
