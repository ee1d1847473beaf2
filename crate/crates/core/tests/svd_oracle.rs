//! Truncated SVD checked against nalgebra's Golub-Kahan SVD.

use dysplit::linalg::{dense_svd, truncated_svd, DenseMatrix, TruncatedSvd};
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
}

fn oracle_singular_values(a: &Array2<f64>) -> Vec<f64> {
    let (m, n) = a.dim();
    let na = nalgebra::DMatrix::from_fn(m, n, |i, j| a[[i, j]]);
    let mut s: Vec<f64> = na.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

fn orthonormality_error(q: &Array2<f64>) -> f64 {
    let g = q.t().dot(q);
    let mut worst = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[[i, j]] - want).abs());
        }
    }
    worst
}

#[test]
fn random_50x40_top5_matches_oracle() {
    let a = gaussian(50, 40, 11);
    let svd = truncated_svd(&DenseMatrix::from_array(a.clone()).unwrap(), 5, 1e-10).unwrap();
    let oracle = oracle_singular_values(&a);
    for (j, (got, want)) in svd.s.iter().zip(&oracle).take(5).enumerate() {
        assert!((got - want).abs() < 1e-8, "σ{j}: {got} vs {want}");
    }
    assert!(orthonormality_error(&svd.u) < 1e-10);
    assert!(orthonormality_error(&svd.v) < 1e-10);
}

#[test]
fn randomized_path_matches_oracle_on_decaying_spectrum() {
    // 200 x 150 with a geometric spectrum so subspace iteration has a gap to work with
    let (m, n, k) = (200, 150, 10);
    let u = dysplit::linalg::orthonormalize(gaussian(m, n, 21));
    let v = dysplit::linalg::orthonormalize(gaussian(n, n, 22));
    let mut us = u.clone();
    for j in 0..n {
        let sv = 100.0 * 0.85_f64.powi(j as i32);
        us.column_mut(j).mapv_inplace(|x| x * sv);
    }
    let a = us.dot(&v.t());
    let cfg = TruncatedSvd { tol: 1e-12, ..TruncatedSvd::default() };
    let svd = cfg.randomized(a.view(), k).unwrap();
    let oracle = oracle_singular_values(&a);
    for j in 0..k {
        assert!((svd.s[j] - oracle[j]).abs() < 1e-8 * oracle[0], "σ{j}");
    }
    assert!(orthonormality_error(&svd.u) < 1e-10);
    assert!(orthonormality_error(&svd.v) < 1e-10);
    // U diag(S) Vᵀ is the best rank-k approximation: the residual is the tail
    let tail: f64 = oracle[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
    let err = (&a - &svd.reconstruct()).iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((err - tail).abs() < 1e-7 * oracle[0]);
}

#[test]
fn randomized_is_deterministic_under_seed() {
    let a = gaussian(90, 80, 5);
    let cfg = TruncatedSvd { tol: 1e-9, ..TruncatedSvd::default() };
    let first = cfg.randomized(a.view(), 4).unwrap();
    let second = cfg.randomized(a.view(), 4).unwrap();
    assert_eq!(first.s, second.s);
    assert_eq!(first.u, second.u);
}

#[test]
fn dense_svd_full_spectrum_matches_oracle() {
    let a = gaussian(30, 45, 8);
    let svd = dense_svd(&DenseMatrix::from_array(a.clone()).unwrap());
    let oracle = oracle_singular_values(&a);
    for (x, y) in svd.s.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-10);
    }
    let rec = svd.reconstruct();
    assert!((&rec - &a).iter().all(|d| d.abs() < 1e-11));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reconstruction_error_equals_tail_norm(rows in 2usize..=60, cols in 2usize..=60, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let a = gaussian(rows, cols, seed);
        let k = 1 + ((rows.min(cols) - 1) as f64 * frac) as usize;
        let svd = truncated_svd(&DenseMatrix::from_array(a.clone()).unwrap(), k, 1e-10).unwrap();
        let oracle = oracle_singular_values(&a);
        let tail: f64 = oracle[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let err = (&a - &svd.reconstruct()).iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((err - tail).abs() < 1e-7, "err {} tail {}", err, tail);
        prop_assert!(svd.s.windows(2).into_iter().all(|w| w[0] >= w[1] && w[1] >= 0.0));
    }
}
