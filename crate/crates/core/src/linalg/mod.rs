//! Dense kernels, masked projections and a truncated SVD.

mod dense;
mod factor;
mod observation;
mod svd;

pub use dense::DenseMatrix;
pub use factor::{orthonormalize, top_eigenvalue_gram, Cholesky};
pub use observation::{masked_relative_residual, project_omega, ObservationSet};
pub(crate) use observation::masked_residual_raw;
pub use svd::{dense_svd, truncated_svd, SvdTriplet, TruncatedSvd, DEFAULT_SVD_TOL};

use ndarray::ArrayView1;

pub(crate) fn norm2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub(crate) fn norm_inf(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn dist2(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
