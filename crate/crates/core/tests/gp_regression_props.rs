mod common;

use common::*;
use monogp::gp_regression::{log_marginal, log_marginal_and_grad, FittedGp, GpOptions, VarianceKind};
use monogp::hyperopt::{fit_regular, OptimizerConfig};
use monogp::Hyperparameters;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn fd_grad(x: &DMatrix<f64>, y: &DVector<f64>, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[i] += h;
            dn[i] -= h;
            let fu = log_marginal(x, y, &Hyperparameters::from_log(&up).unwrap()).unwrap();
            let fdn = log_marginal(x, y, &Hyperparameters::from_log(&dn).unwrap()).unwrap();
            (fu - fdn) / (2.0 * h)
        })
        .collect()
}

#[test]
fn analytic_gradient_matches_central_differences() {
    for seed in 0..10u64 {
        let n = 5 + (seed as usize * 7) % 16;
        let d = 1 + seed as usize % 3;
        let f = fixture(100 + seed, n, d);
        let theta = f.hp.to_log();
        let (_, g) = log_marginal_and_grad(&f.x, &f.y, &f.hp).unwrap();
        let fd = fd_grad(&f.x, &f.y, &theta, 1e-5);
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for (a, b) in g.iter().zip(&fd) {
            let err = (a - b).abs() / b.abs().max(1e-3 * scale);
            assert!(err < 1e-5, "seed {seed}: analytic {a} vs fd {b} (rel {err:e})");
        }
    }
}

#[test]
fn small_instance_gradient() {
    let f = fixture(7, 5, 2);
    let (_, g) = log_marginal_and_grad(&f.x, &f.y, &f.hp).unwrap();
    let fd = fd_grad(&f.x, &f.y, &f.hp.to_log(), 1e-5);
    for (a, b) in g.iter().zip(&fd) {
        assert!(rel_err(*a, *b) < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn optimizer_returns_a_stationary_point() {
    let d = monogp::datasets::gen_logistic(10, 3);
    let (x, y) = d.train();
    let (hp, res) = fit_regular(&x, &y, false, &OptimizerConfig::default()).unwrap();
    let (_, g) = log_marginal_and_grad(&x, &y, &hp).unwrap();
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(gmax < 1e-4, "gradient {g:?}");
    for t in res.restarts.iter().flatten() {
        assert!(t.best_value >= t.values[0]);
    }
}

#[test]
fn alpha_solves_the_factorized_system() {
    for seed in 0..5 {
        let f = fixture(seed, 15, 2);
        let gp = FittedGp::fit(&f.x, &f.y, &f.hp).unwrap();
        let a = gp.noisy_covariance().unwrap();
        let resid = (&a * gp.alpha() - &f.y).norm();
        assert!(resid < 1e-8 * f.y.norm(), "residual {resid:e}");
    }
}

#[test]
fn derivative_mean_matches_differences_of_mean() {
    let f = fixture(21, 12, 2);
    let gp = FittedGp::fit(&f.x, &f.y, &f.hp).unwrap();
    let q = DMatrix::from_row_slice(3, 2, &[0.3, 0.9, 1.1, 1.4, 1.8, 0.2]);
    for d in 0..2 {
        let slope = gp.predict_derivative(&q, d).unwrap();
        let h = 1e-5 * f.hp.length_scales[d];
        let mut up = q.clone();
        let mut dn = q.clone();
        up.column_mut(d).add_scalar_mut(h);
        dn.column_mut(d).add_scalar_mut(-h);
        let mu = gp.predict(&up).unwrap().mean;
        let md = gp.predict(&dn).unwrap().mean;
        for i in 0..3 {
            let fd = (mu[i] - md[i]) / (2.0 * h);
            assert!(rel_err(slope.mean[i], fd) < 1e-5, "{} vs {fd}", slope.mean[i]);
        }
    }
}

#[test]
fn derivative_variance_reverts_far_away() {
    let f = fixture(22, 8, 1);
    let gp = FittedGp::fit(&f.x, &f.y, &f.hp).unwrap();
    let p = gp.predict_derivative(&col(&[1e3]), 0).unwrap();
    let prior = f.hp.signal_var() / f.hp.length_scales[0].powi(2);
    assert!(rel_err(p.variance[0], prior) < 1e-12);
}

#[test]
fn centering_restores_the_offset_far_away() {
    let x = col(&[0.0, 1.0, 2.0]);
    let y = DVector::from_vec(vec![10.0, 11.0, 12.0]);
    let hp = Hyperparameters::new(1.0, vec![0.5], 0.1).unwrap();
    let gp = FittedGp::fit_with(&x, &y, &hp, GpOptions::centered()).unwrap();
    let p = gp.predict(&col(&[100.0])).unwrap();
    assert!((p.mean[0] - 11.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictive_variance_is_bounded_by_prior(seed in 0u64..10_000, n in 1usize..15, d in 1usize..4) {
        let f = fixture(seed, n, d);
        let gp = FittedGp::fit(&f.x, &f.y, &f.hp).unwrap();
        let mut r = rng(seed ^ 0xabc);
        let q = random_points(&mut r, 20, d, -1.0, 3.0);
        let p = gp.predict_with(&q, VarianceKind::Observed).unwrap();
        let bound = f.hp.signal_var() + f.hp.noise_var();
        for v in &p.variance {
            prop_assert!(*v >= 0.0 && *v <= bound * (1.0 + 1e-12));
        }
    }
}
