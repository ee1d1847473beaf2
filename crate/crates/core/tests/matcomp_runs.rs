use dysplit::datagen::RngSeed;
use dysplit::linalg::{DenseMatrix, ObservationSet, TruncatedSvd};
use dysplit::matcomp::{
    default_rule, drs_complete, drs_step_policy, dys_complete, dys_step_policy, rmse, svp_complete,
    svt_complete, CompletionInstance, SvpStep, SvtParams,
};
use dysplit::splitting::RunStatus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> CompletionInstance {
    CompletionInstance::synthetic(120, 5, 0.3, 1.5e-6, RngSeed(seed)).unwrap()
}

#[test]
fn rmse_matches_two_pass_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = DenseMatrix::new(15, 12, (0..180).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
    let idx: Vec<_> = (0..40).map(|k| (k % 15, (k * 7) % 12)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let vals: Vec<f64> = idx.iter().map(|_| rng.random_range(1.0..5.0)).collect();
    let test = ObservationSet::new((15, 12), idx.clone(), vals.clone()).unwrap();

    // first pass: residuals, second pass: mean of squares
    let resid: Vec<f64> = idx.iter().zip(&vals).map(|(&(i, j), v)| x.get(i, j) - v).collect();
    let mut acc = 0.0;
    for r in &resid {
        acc += r * r;
    }
    let expect = (acc / resid.len() as f64).sqrt();
    assert!((rmse(&x, &test).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn splitting_solvers_recover_and_dys_is_faster() {
    let rule = default_rule(2000).unwrap();
    for seed in 0..3 {
        let inst = instance(seed);
        let dys = dys_complete(&inst, dys_step_policy(1.0, 1e6).unwrap(), &rule).unwrap();
        let drs = drs_complete(&inst, drs_step_policy(1e6).unwrap(), &rule).unwrap();
        assert_eq!(dys.status, RunStatus::Converged);
        assert_eq!(drs.status, RunStatus::Converged);
        assert!(dys.relative_error.unwrap() < 1e-3, "seed {seed}: {:?}", dys.relative_error);
        assert!(drs.relative_error.unwrap() < 1e-3, "seed {seed}: {:?}", drs.relative_error);
        assert!(dys.iterations <= drs.iterations, "seed {seed}: {} vs {}", dys.iterations, drs.iterations);
        // stopping rule holds at the returned iterate
        let last = dys.trace.last().unwrap().monitor.unwrap();
        assert!(last < 1e-4);
    }
}

#[test]
fn baselines_reach_tolerance() {
    let inst = CompletionInstance::synthetic(200, 5, 0.3, 1.5e-6, RngSeed(11)).unwrap();
    let rule = default_rule(1000).unwrap();
    let dys = dys_complete(&inst, dys_step_policy(1.0, 1e6).unwrap(), &rule).unwrap();
    let svp = svp_complete(&inst, SvpStep::InverseSqrt, &rule).unwrap();
    assert_eq!(svp.status, RunStatus::Converged);
    assert!(svp.relative_error.unwrap() < 1e-3);
    assert!(svp.iterations > dys.iterations);

    let svt = svt_complete(&inst, SvtParams::standard(&inst), &rule).unwrap();
    assert_eq!(svt.status, RunStatus::Converged);
    assert!(svt.relative_error.unwrap() < 1e-3, "{:?}", svt.relative_error);
}

#[test]
fn warm_and_cold_svd_agree() {
    let inst = instance(5);
    let rule = default_rule(2000).unwrap();
    let warm = dys_complete(&inst, dys_step_policy(1.0, 1e6).unwrap(), &rule).unwrap();
    // the dense path never uses a warm start
    let dense = TruncatedSvd { dense_cutoff: usize::MAX, ..TruncatedSvd::default() };
    let problem = dysplit::matcomp::CompletionProblem::new(&inst, inst.lambda, 1.0).unwrap().with_svd(dense);
    let cold = dysplit::matcomp::solve_splitting(&inst, &problem, dys_step_policy(1.0, 1e6).unwrap(), &rule).unwrap();
    assert_eq!(warm.iterations, cold.iterations);
    assert!(warm.x_opt.max_abs_diff(&cold.x_opt) < 1e-6 * warm.x_opt.frobenius_norm());
}
