//! Exact zero-mean GP regression with Gaussian observation noise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{GpError, Result};
use crate::exec::Execution;
use crate::kernel::{self, DerivativePointSet, Hyperparameters, QueryKind};
use crate::linalg::JitteredCholesky;

/// Whether reported variances include the observation noise σ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    /// Variance of the latent function value.
    #[default]
    Latent,
    /// Latent variance plus σ².
    Observed,
}

/// Posterior moments at a batch of query points.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// How many variances came out negative and were clamped to zero.
    pub clamped: usize,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }

    /// Builds a set from raw moments, clamping negative variances to zero.
    pub(crate) fn from_raw(mean: Vec<f64>, mut variance: Vec<f64>, prior_var: f64) -> Self {
        let mut clamped = 0;
        for v in variance.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-10 * prior_var {
                    log::warn!("clamping negative predictive variance {v:e}");
                }
                *v = 0.0;
                clamped += 1;
            }
        }
        PredictionSet {
            mean,
            variance,
            clamped,
        }
    }
}

/// Fitting options. The default matches the plain zero-mean formulation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GpOptions {
    /// Subtract the training mean of `y` before fitting and add it back
    /// to predictions.
    pub center: bool,
    pub exec: Execution,
}

impl GpOptions {
    pub fn centered() -> Self {
        GpOptions {
            center: true,
            ..Default::default()
        }
    }
}

pub(crate) fn validate_data(x: &DMatrix<f64>, y: &DVector<f64>, hp: &Hyperparameters) -> Result<()> {
    hp.validate()?;
    if x.nrows() == 0 {
        return Err(GpError::EmptyData);
    }
    if x.nrows() != y.len() {
        return Err(GpError::Shape(format!(
            "{} input rows but {} outputs",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != hp.dim() {
        return Err(GpError::Shape(format!(
            "inputs have {} columns but hyperparameters have {} length scales",
            x.ncols(),
            hp.dim()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(GpError::InvalidInput("non-finite training value".into()));
    }
    Ok(())
}

/// A GP conditioned on training data with fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct FittedGp {
    hp: Hyperparameters,
    x_train: DMatrix<f64>,
    y_train: DVector<f64>,
    offset: f64,
    factor: JitteredCholesky,
    alpha: DVector<f64>,
    exec: Execution,
}

impl FittedGp {
    /// Zero-mean fit on `y` as given.
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, hp: &Hyperparameters) -> Result<Self> {
        Self::fit_with(x, y, hp, GpOptions::default())
    }

    pub fn fit_with(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        hp: &Hyperparameters,
        opts: GpOptions,
    ) -> Result<Self> {
        validate_data(x, y, hp)?;
        let offset = if opts.center { y.mean() } else { 0.0 };
        let yc = y.map(|v| v - offset);
        let factor = factor_noisy(x, hp, opts.exec)?;
        let alpha = factor.solve(&yc);
        Ok(FittedGp {
            hp: hp.clone(),
            x_train: x.clone(),
            y_train: y.clone(),
            offset,
            factor,
            alpha,
            exec: opts.exec,
        })
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn x_train(&self) -> &DMatrix<f64> {
        &self.x_train
    }

    pub fn y_train(&self) -> &DVector<f64> {
        &self.y_train
    }

    /// Constant added back to predictions (training mean when centered).
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `(K_ff + σ²I + jitter)⁻¹ (y − offset)`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn factor(&self) -> &JitteredCholesky {
        &self.factor
    }

    /// The exact matrix that was factorized.
    pub fn noisy_covariance(&self) -> Result<DMatrix<f64>> {
        let mut k = kernel::value_covariance(&self.x_train, &self.hp, self.exec)?;
        for (i, add) in self.factor.added.iter().enumerate() {
            k[(i, i)] += self.hp.noise_var() + add;
        }
        Ok(k)
    }

    /// Log marginal likelihood of the (centered) training outputs.
    pub fn log_marginal(&self) -> f64 {
        let yc = self.y_train.map(|v| v - self.offset);
        log_marginal_from(&self.factor, &yc, &self.alpha)
    }

    pub fn predict(&self, xq: &DMatrix<f64>) -> Result<PredictionSet> {
        self.predict_kind(xq, QueryKind::Value, VarianceKind::Latent)
    }

    pub fn predict_with(&self, xq: &DMatrix<f64>, var: VarianceKind) -> Result<PredictionSet> {
        self.predict_kind(xq, QueryKind::Value, var)
    }

    /// Posterior of `∂f/∂x_d` at each query.
    pub fn predict_derivative(&self, xq: &DMatrix<f64>, d: usize) -> Result<PredictionSet> {
        self.predict_kind(xq, QueryKind::Slope(d), VarianceKind::Latent)
    }

    /// Cross-covariance with the training values and `L⁻¹ K_f*`.
    pub(crate) fn query_terms(
        &self,
        xq: &DMatrix<f64>,
        kind: QueryKind,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let empty = DerivativePointSet::empty(self.hp.dim());
        let kq = kernel::cross_covariance(xq, kind, &self.x_train, &empty, &self.hp, self.exec)?;
        let v = self.factor.solve_lower(&kq.transpose());
        Ok((kq, v))
    }

    fn predict_kind(
        &self,
        xq: &DMatrix<f64>,
        kind: QueryKind,
        var: VarianceKind,
    ) -> Result<PredictionSet> {
        let (kq, v) = self.query_terms(xq, kind)?;
        let shift = match kind {
            QueryKind::Value => self.offset,
            QueryKind::Slope(_) => 0.0,
        };
        let mean: Vec<f64> = (&kq * &self.alpha).iter().map(|m| m + shift).collect();
        let prior = kernel::query_prior_variance(kind, &self.hp);
        let noise = match (var, kind) {
            (VarianceKind::Observed, QueryKind::Value) => self.hp.noise_var(),
            _ => 0.0,
        };
        let variance = v
            .column_iter()
            .map(|c| prior - c.norm_squared() + noise)
            .collect();
        Ok(PredictionSet::from_raw(mean, variance, self.hp.signal_var()))
    }
}

pub(crate) fn factor_noisy(
    x: &DMatrix<f64>,
    hp: &Hyperparameters,
    exec: Execution,
) -> Result<JitteredCholesky> {
    let mut k = kernel::value_covariance(x, hp, exec)?;
    let nv = hp.noise_var();
    for i in 0..k.nrows() {
        k[(i, i)] += nv;
    }
    JitteredCholesky::factor(&k, &vec![hp.signal_var(); x.nrows()])
}

fn log_marginal_from(factor: &JitteredCholesky, y: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    -0.5 * y.dot(alpha) - 0.5 * factor.log_det() - 0.5 * n * (2.0 * PI).ln()
}

/// `−½ yᵀ(K+σ²I)⁻¹y − ½ log|K+σ²I| − (N/2) log 2π` on `y` as given.
pub fn log_marginal(x: &DMatrix<f64>, y: &DVector<f64>, hp: &Hyperparameters) -> Result<f64> {
    validate_data(x, y, hp)?;
    let factor = factor_noisy(x, hp, Execution::default())?;
    let alpha = factor.solve(y);
    Ok(log_marginal_from(&factor, y, &alpha))
}

/// Gradient of [`log_marginal`] with respect to `(ln η, ln ρ_d.., ln σ)`.
pub fn log_marginal_grad(x: &DMatrix<f64>, y: &DVector<f64>, hp: &Hyperparameters) -> Result<Vec<f64>> {
    log_marginal_and_grad(x, y, hp).map(|(_, g)| g)
}

pub fn log_marginal_and_grad(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    hp: &Hyperparameters,
) -> Result<(f64, Vec<f64>)> {
    validate_data(x, y, hp)?;
    let n = x.nrows();
    let kff = kernel::value_covariance(x, hp, Execution::default())?;
    let mut a = kff.clone();
    for i in 0..n {
        a[(i, i)] += hp.noise_var();
    }
    let factor = JitteredCholesky::factor(&a, &vec![hp.signal_var(); n])?;
    let alpha = factor.solve(y);
    let value = log_marginal_from(&factor, y, &alpha);
    let ainv = factor.inverse();

    // ½ tr((ααᵀ − A⁻¹) ∂A/∂θ)
    let half_trace = |da: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += (alpha[i] * alpha[j] - ainv[(i, j)]) * da[(i, j)];
            }
        }
        0.5 * s
    };

    let mut grads = kernel::value_covariance_log_grads(x, &kff, hp);
    // The jitter is proportional to η², so it moves with ln η.
    let jitter = factor.level * hp.signal_var();
    for i in 0..n {
        grads[0][(i, i)] += 2.0 * jitter;
    }
    let mut g: Vec<f64> = grads.iter().map(half_trace).collect();
    // ∂A/∂ln σ = 2σ² I
    let diag_term: f64 = (0..n).map(|i| alpha[i] * alpha[i] - ainv[(i, i)]).sum();
    g.push(hp.noise_var() * diag_term);
    Ok((value, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn log_marginal_examples() {
        let hp = Hyperparameters::new(1.3, vec![1.0], 0.4).unwrap();
        let x = col(&[0.2]);
        let v = log_marginal(&x, &DVector::from_element(1, 0.0), &hp).unwrap();
        let expect = -0.5 * (1.69f64 + 0.16 + 1e-8 * 1.69).ln() - 0.5 * (2.0 * PI).ln();
        assert_relative_eq!(v, expect, max_relative = 1e-12);

        let hp = Hyperparameters::new(1.0, vec![1.0], 0.0).unwrap();
        let v = log_marginal(&x, &DVector::from_element(1, 1.0), &hp).unwrap();
        assert_relative_eq!(v, -1.418938533204673, max_relative = 1e-7);
    }

    #[test]
    fn scaling_y_lowers_likelihood() {
        let hp = Hyperparameters::new(1.0, vec![0.8], 0.1).unwrap();
        let x = col(&[0.0, 0.5, 1.1, 2.0]);
        let y = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        let a = log_marginal(&x, &y, &hp).unwrap();
        let b = log_marginal(&x, &(&y * 10.0), &hp).unwrap();
        assert!(b < a);
    }

    #[test]
    fn single_point_prediction() {
        let hp = Hyperparameters::new(1.0, vec![1.0], 0.0).unwrap();
        let gp = FittedGp::fit(&col(&[0.0]), &DVector::from_element(1, 1.0), &hp).unwrap();
        let p = gp.predict(&col(&[1.0])).unwrap();
        assert_relative_eq!(p.mean[0], 0.6065306597126334, max_relative = 1e-7);
        assert_relative_eq!(p.variance[0], 0.6321205588285577, max_relative = 1e-7);
    }

    #[test]
    fn prior_reversion_far_away() {
        let hp = Hyperparameters::new(2.0, vec![0.5], 0.1).unwrap();
        let x = col(&[0.0, 0.3, 0.9]);
        let y = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let gp = FittedGp::fit(&x, &y, &hp).unwrap();
        let p = gp.predict(&col(&[100.0])).unwrap();
        assert!(p.mean[0].abs() < 1e-12);
        assert_relative_eq!(p.variance[0], 4.0, max_relative = 1e-12);
        let obs = gp.predict_with(&col(&[100.0]), VarianceKind::Observed).unwrap();
        assert_relative_eq!(obs.variance[0], 4.01, max_relative = 1e-12);
        let d = gp.predict_derivative(&col(&[100.0]), 0).unwrap();
        assert_relative_eq!(d.variance[0], 4.0 / 0.25, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_interpolation() {
        let hp = Hyperparameters::new(1.0, vec![0.7], 0.0).unwrap();
        let x = col(&[-1.0, 0.0, 0.6, 1.5]);
        let y = DVector::from_vec(vec![0.2, -0.4, 1.0, 0.3]);
        let gp = FittedGp::fit(&x, &y, &hp).unwrap();
        let p = gp.predict(&x).unwrap();
        for i in 0..4 {
            assert!((p.mean[i] - y[i]).abs() < 1e-6);
            assert!(p.variance[i] < 1e-6);
        }
    }

    #[test]
    fn constant_data_has_flat_derivative_after_centering() {
        let hp = Hyperparameters::new(1.0, vec![0.7], 0.1).unwrap();
        let x = col(&[-1.0, 0.0, 0.6, 1.5]);
        let y = DVector::from_element(4, 3.5);
        let gp = FittedGp::fit_with(&x, &y, &hp, GpOptions::centered()).unwrap();
        let d = gp.predict_derivative(&col(&[-0.5, 0.2, 2.0]), 0).unwrap();
        assert!(d.mean.iter().all(|m| *m == 0.0));
        let p = gp.predict(&col(&[0.2])).unwrap();
        assert_relative_eq!(p.mean[0], 3.5, max_relative = 1e-15);
    }

    #[test]
    fn empty_and_mismatched_inputs_rejected() {
        let hp = Hyperparameters::new(1.0, vec![1.0], 0.1).unwrap();
        let x = DMatrix::<f64>::zeros(0, 1);
        assert_eq!(
            FittedGp::fit(&x, &DVector::zeros(0), &hp).unwrap_err(),
            GpError::EmptyData
        );
        let gp = FittedGp::fit(&col(&[0.0, 1.0]), &DVector::from_vec(vec![0.0, 1.0]), &hp).unwrap();
        assert!(matches!(
            gp.predict(&DMatrix::zeros(2, 2)),
            Err(GpError::Shape(_))
        ));
    }

    #[test]
    fn refit_is_bitwise_identical() {
        let hp = Hyperparameters::new(0.9, vec![0.4], 0.05).unwrap();
        let x = col(&[0.0, 0.2, 0.5, 0.9, 1.4]);
        let y = DVector::from_vec(vec![0.1, 0.3, 0.2, 0.8, 0.9]);
        let a = FittedGp::fit_with(&x, &y, &hp, GpOptions::centered()).unwrap();
        let b = FittedGp::fit_with(&x, &y, &hp, GpOptions::centered()).unwrap();
        assert_eq!(a.alpha(), b.alpha());
    }
}
