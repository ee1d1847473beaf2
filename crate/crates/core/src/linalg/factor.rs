use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    pub fn factor(a: ArrayView2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("Cholesky of non-square {:?}", a.dim())));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let row_j = l.slice(s![j, ..j]).to_owned();
            let d = a[[j, j]] - row_j.dot(&row_j);
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[[j, j]] = djj;
            for i in (j + 1)..n {
                let dot = l.slice(s![i, ..j]).dot(&row_j);
                l[[i, j]] = (a[[i, j]] - dot) / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.lower;
        let mut y = b.clone();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= l[[i, k]] * y[k];
            }
            y[i] = acc / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= l[[k, i]] * y[k];
            }
            y[i] = acc / l[[i, i]];
        }
        y
    }
}

/// Orthonormal basis for the column span of `y` (modified Gram-Schmidt, applied twice).
///
/// Columns that vanish after projection are replaced by the first standard basis
/// vector that is not yet spanned, so the result always has `y.ncols()` orthonormal
/// columns when `y.ncols() <= y.nrows()`.
pub fn orthonormalize(mut y: Array2<f64>) -> Array2<f64> {
    let (m, k) = y.dim();
    assert!(k <= m, "cannot orthonormalize {k} columns in dimension {m}");
    let mut next_basis = 0usize;
    for j in 0..k {
        let scale = y.column(j).dot(&y.column(j)).sqrt();
        let mut ok = project_out(&mut y, j, scale);
        while !ok {
            let mut col = y.column_mut(j);
            col.fill(0.0);
            col[next_basis % m] = 1.0;
            next_basis += 1;
            ok = project_out(&mut y, j, 1.0);
        }
    }
    y
}

// Removes components along columns 0..j from column j and normalizes it.
// Returns false when the column is numerically dependent.
fn project_out(y: &mut Array2<f64>, j: usize, scale: f64) -> bool {
    for _ in 0..2 {
        for p in 0..j {
            let (done, mut rest) = y.view_mut().split_at(Axis(1), j);
            let qp = done.column(p);
            let mut col = rest.column_mut(0);
            let c = qp.dot(&col);
            col.scaled_add(-c, &qp);
        }
    }
    let norm = y.column(j).dot(&y.column(j)).sqrt();
    if !(norm > 1e-12 * scale.max(f64::MIN_POSITIVE)) || norm == 0.0 {
        return false;
    }
    y.column_mut(j).mapv_inplace(|v| v / norm);
    true
}

/// Largest eigenvalue of `AᵀA` (equivalently `‖A‖₂²`) by power iteration.
pub fn top_eigenvalue_gram(a: ArrayView2<f64>, tol: f64, max_iter: usize, seed: u64) -> f64 {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return 0.0;
    }
    // iterate on the smaller Gram matrix
    let gram = if m <= n { a.dot(&a.t()) } else { a.t().dot(&a) };
    let dim = gram.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Array1<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.dot(&v).sqrt();
    v /= norm;
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = gram.dot(&v);
        let next = v.dot(&w);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (next - lambda).abs() <= tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}
