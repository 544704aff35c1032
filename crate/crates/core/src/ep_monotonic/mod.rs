//! Monotonicity-constrained GP.
//!
//! The joint latent vector is `[f(X); s ⊙ f'(X_m)]`. The Gaussian data
//! block is conditioned on exactly first, which leaves a Gaussian prior
//! `N(m, C)` over the M signed derivatives given `y`. The M probit factors
//! `Φ(f'_i / ν)` are then replaced by Gaussian sites with expectation
//! propagation. Conditioning in two stages is algebraically the same as
//! working with `K_joint + Σ̃_joint` directly, but never forms the inverse of
//! a site variance, so flat sites (`σ̃² = ∞`) are representable.

pub mod inducing;
pub mod probit;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::exec::Execution;
use crate::gp_regression::{validate_data, FittedGp, GpOptions, PredictionSet, VarianceKind};
use crate::kernel::{self, DerivativePointSet, Hyperparameters, QueryKind};
use crate::linalg::{cholesky_spd, JITTER_LEVELS};

pub use inducing::{default_m_per_dim, place_inducing, InducingPolicy};
pub use probit::{
    ep_update_site, inverse_mills, log_probit, probit, tilted_moments, Cavity, Site,
    TiltedMoments,
};

pub const DEFAULT_NU: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpOptions {
    /// Probit steepness ν.
    pub nu: f64,
    /// Fraction of each proposed site change that is applied.
    pub damping: f64,
    /// Convergence threshold on the scaled site-parameter change.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Center `y` on its training mean.
    pub center: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions {
            nu: DEFAULT_NU,
            damping: 0.8,
            tol: 1e-6,
            max_sweeps: 200,
            center: false,
            exec: Execution::default(),
        }
    }
}

impl EpOptions {
    pub fn centered() -> Self {
        EpOptions {
            center: true,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(GpError::InvalidInput(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(GpError::InvalidInput(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_sweeps == 0 {
            return Err(GpError::InvalidInput("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged (or last) EP sites and the matching cavities and posterior
/// over the signed derivative latents.
#[derive(Debug, Clone, PartialEq)]
pub struct EpState {
    sites: Vec<Site>,
    cavities: Vec<Cavity>,
    post_mean: DVector<f64>,
    post_cov: DMatrix<f64>,
    sweeps: usize,
    max_delta: f64,
    converged: bool,
}

impl EpState {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site_means(&self) -> Vec<f64> {
        self.sites.iter().map(Site::mean).collect()
    }

    /// `σ̃²_i`; `+∞` for a flat site.
    pub fn site_vars(&self) -> Vec<f64> {
        self.sites.iter().map(Site::var).collect()
    }

    pub fn site_log_norms(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.log_norm).collect()
    }

    pub fn cavities(&self) -> &[Cavity] {
        &self.cavities
    }

    pub fn cavity_means(&self) -> Vec<f64> {
        self.cavities.iter().map(|c| c.mean).collect()
    }

    pub fn cavity_vars(&self) -> Vec<f64> {
        self.cavities.iter().map(|c| c.var).collect()
    }

    /// Posterior mean of the signed derivatives.
    pub fn derivative_mean(&self) -> &DVector<f64> {
        &self.post_mean
    }

    pub fn derivative_cov(&self) -> &DMatrix<f64> {
        &self.post_cov
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn max_delta(&self) -> f64 {
        self.max_delta
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

/// Posterior over the derivative latents for a fixed set of sites.
struct SitePosterior {
    cov: DMatrix<f64>,
    mean: DVector<f64>,
    sqrt_tau: DVector<f64>,
    b_chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

fn site_posterior(m: &DVector<f64>, c: &DMatrix<f64>, sites: &[Site]) -> Result<SitePosterior> {
    let k = sites.len();
    let sqrt_tau = DVector::from_iterator(k, sites.iter().map(|s| s.precision.max(0.0).sqrt()));
    let tnu = DVector::from_iterator(k, sites.iter().map(|s| s.shift));
    let mut b = DMatrix::from_fn(k, k, |i, j| sqrt_tau[i] * c[(i, j)] * sqrt_tau[j]);
    for i in 0..k {
        b[(i, i)] += 1.0;
    }
    let b_chol = cholesky_spd(b)?;
    let mut sc = c.clone();
    for i in 0..k {
        sc.row_mut(i).scale_mut(sqrt_tau[i]);
    }
    let v = b_chol
        .l_dirty()
        .solve_lower_triangular(&sc)
        .ok_or(GpError::Conditioning { jitters: vec![0.0] })?;
    let cov = c - v.transpose() * &v;
    let rhs = (c * &tnu + m).component_mul(&sqrt_tau);
    let alpha = &tnu - b_chol.solve(&rhs).component_mul(&sqrt_tau);
    let mean = c * &alpha + m;
    Ok(SitePosterior {
        cov,
        mean,
        sqrt_tau,
        b_chol,
        alpha,
    })
}

fn cavity_of(post_mean: f64, post_var: f64, site: &Site) -> Option<Cavity> {
    let prec = 1.0 / post_var - site.precision;
    if !(prec > 0.0 && prec.is_finite()) {
        return None;
    }
    let var = 1.0 / prec;
    Some(Cavity {
        mean: var * (post_mean / post_var - site.shift),
        var,
    })
}

/// Column `i` of a symmetric matrix whose lower triangle is current.
fn lower_column(a: &DMatrix<f64>, i: usize) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |j, _| if j >= i { a[(j, i)] } else { a[(i, j)] })
}

struct EpRun {
    sites: Vec<Site>,
    post: SitePosterior,
    sweeps: usize,
    max_delta: f64,
}

fn run_ep(m: &DVector<f64>, c: &DMatrix<f64>, opts: &EpOptions) -> Result<EpRun> {
    let k = m.len();
    let mut sites = vec![Site::FLAT; k];
    let mut sigma = c.clone();
    let mut mu = m.clone();
    let mut max_delta = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        max_delta = 0.0;
        for i in 0..k {
            let s2 = sigma[(i, i)];
            let old = sites[i];
            let Some(cav) = cavity_of(mu[i], s2, &old) else {
                continue;
            };
            let prop = ep_update_site(cav, opts.nu, 1.0);
            let prec = (old.precision + opts.damping * (prop.precision - old.precision)).max(0.0);
            let shift = old.shift + opts.damping * (prop.shift - old.shift);
            let d_prec = prec - old.precision;
            let d_shift = shift - old.shift;
            let scale = 1.0 / cav.var + prec;
            max_delta = max_delta
                .max(d_prec.abs() / scale)
                .max(d_shift.abs() / scale.sqrt());
            sites[i] = Site {
                precision: prec,
                shift,
                log_norm: prop.log_norm,
            };

            let denom = 1.0 + d_prec * s2;
            if denom > 1e-12 {
                let cf = d_prec / denom;
                let col = lower_column(&sigma, i);
                let step = d_shift / denom - cf * mu[i];
                mu.axpy(step, &col, 1.0);
                sigma.syger(-cf, &col, &col, 1.0);
            } else {
                let p = site_posterior(m, c, &sites)?;
                sigma = p.cov;
                mu = p.mean;
            }
        }
        if max_delta < opts.tol {
            let post = site_posterior(m, c, &sites)?;
            return Ok(EpRun {
                sites,
                post,
                sweeps: sweep,
                max_delta,
            });
        }
    }
    Err(GpError::Convergence {
        sweeps: opts.max_sweeps,
        max_delta,
    })
}

/// GP with derivative-sign constraints at virtual points.
#[derive(Debug, Clone)]
pub struct MonotonicGp {
    base: FittedGp,
    dps: DerivativePointSet,
    opts: EpOptions,
    /// `L_A⁻¹ K_{f,f'}` where `A = K_ff + σ²I + jitter`.
    w: DMatrix<f64>,
    /// Prior over derivatives given y.
    prior_mean: DVector<f64>,
    prior_cov: DMatrix<f64>,
    deriv_jitter: Vec<f64>,
    sqrt_tau: DVector<f64>,
    b_chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
    state: EpState,
}

impl std::fmt::Debug for SitePosterior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SitePosterior").finish_non_exhaustive()
    }
}

struct Conditioned {
    w: DMatrix<f64>,
    prior_mean: DVector<f64>,
    prior_cov: DMatrix<f64>,
    deriv_jitter: Vec<f64>,
}

fn condition_on_data(
    base: &FittedGp,
    dps: &DerivativePointSet,
    level: f64,
    exec: Execution,
) -> Result<Conditioned> {
    let hp = base.hyperparameters();
    let x = base.x_train();
    let n = x.nrows();
    let m = dps.len();
    let slopes = kernel::derivative_rows(x, dps, hp, exec)?;
    let kcross = slopes.view((0, 0), (m, n)).transpose();
    let mut kdd = slopes.view((0, n), (m, m)).clone_owned();
    let scale = kernel::joint_prior_variances(n, dps, hp);
    let deriv_jitter: Vec<f64> = scale[n..].iter().map(|s| level * s).collect();
    for (i, j) in deriv_jitter.iter().enumerate() {
        kdd[(i, i)] += j;
    }
    let w = base.factor().solve_lower(&kcross);
    let prior_mean = kcross.transpose() * base.alpha();
    let mut prior_cov = kdd - w.transpose() * &w;
    prior_cov = (&prior_cov + prior_cov.transpose()) * 0.5;
    Ok(Conditioned {
        w,
        prior_mean,
        prior_cov,
        deriv_jitter,
    })
}

fn check_dps(x: &DMatrix<f64>, dps: &DerivativePointSet) -> Result<()> {
    if !dps.is_empty() && dps.dim() != x.ncols() {
        return Err(GpError::Shape(format!(
            "derivative points have dimension {} but inputs have {}",
            dps.dim(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Runs EP to convergence for fixed hyperparameters.
pub fn ep_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    dps: &DerivativePointSet,
    hp: &Hyperparameters,
    opts: &EpOptions,
) -> Result<MonotonicGp> {
    MonotonicGp::fit(x, y, dps, hp, opts)
}

impl MonotonicGp {
    pub fn fit(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        dps: &DerivativePointSet,
        hp: &Hyperparameters,
        opts: &EpOptions,
    ) -> Result<Self> {
        opts.validate()?;
        validate_data(x, y, hp)?;
        check_dps(x, dps)?;
        let base = FittedGp::fit_with(
            x,
            y,
            hp,
            GpOptions {
                center: opts.center,
                exec: opts.exec,
            },
        )?;
        if dps.is_empty() {
            return Ok(Self::without_sites(base, dps.clone(), *opts));
        }
        let mut last_err = GpError::Conditioning {
            jitters: JITTER_LEVELS.to_vec(),
        };
        for &level in JITTER_LEVELS.iter() {
            let cond = condition_on_data(&base, dps, level, opts.exec)?;
            match run_ep(&cond.prior_mean, &cond.prior_cov, opts) {
                Ok(run) => return Ok(Self::assemble(base, dps.clone(), *opts, cond, run, true)),
                Err(GpError::Conditioning { .. }) => {
                    last_err = GpError::Conditioning {
                        jitters: JITTER_LEVELS.to_vec(),
                    };
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err)
    }

    /// Rebuilds a model from stored site parameters `(precision, shift)`
    /// without running EP. The state is marked converged.
    pub fn from_sites(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        dps: &DerivativePointSet,
        hp: &Hyperparameters,
        opts: &EpOptions,
        sites: &[(f64, f64)],
    ) -> Result<Self> {
        opts.validate()?;
        validate_data(x, y, hp)?;
        check_dps(x, dps)?;
        if sites.len() != dps.len() {
            return Err(GpError::Shape(format!(
                "{} sites for {} derivative points",
                sites.len(),
                dps.len()
            )));
        }
        if sites.iter().any(|(p, s)| !(p.is_finite() && *p >= 0.0 && s.is_finite())) {
            return Err(GpError::InvalidInput("site precisions must be finite and non-negative".into()));
        }
        let base = FittedGp::fit_with(
            x,
            y,
            hp,
            GpOptions {
                center: opts.center,
                exec: opts.exec,
            },
        )?;
        if dps.is_empty() {
            return Ok(Self::without_sites(base, dps.clone(), *opts));
        }
        let site_vec: Vec<Site> = sites
            .iter()
            .map(|&(precision, shift)| Site {
                precision,
                shift,
                log_norm: 0.0,
            })
            .collect();
        for &level in JITTER_LEVELS.iter() {
            let cond = condition_on_data(&base, dps, level, opts.exec)?;
            if let Ok(post) = site_posterior(&cond.prior_mean, &cond.prior_cov, &site_vec) {
                let run = EpRun {
                    sites: site_vec.clone(),
                    post,
                    sweeps: 0,
                    max_delta: 0.0,
                };
                return Ok(Self::assemble(base, dps.clone(), *opts, cond, run, true));
            }
        }
        Err(GpError::Conditioning {
            jitters: JITTER_LEVELS.to_vec(),
        })
    }

    fn without_sites(base: FittedGp, dps: DerivativePointSet, opts: EpOptions) -> Self {
        let n = base.x_train().nrows();
        MonotonicGp {
            base,
            dps,
            opts,
            w: DMatrix::zeros(n, 0),
            prior_mean: DVector::zeros(0),
            prior_cov: DMatrix::zeros(0, 0),
            deriv_jitter: Vec::new(),
            sqrt_tau: DVector::zeros(0),
            b_chol: None,
            alpha: DVector::zeros(0),
            state: EpState {
                sites: Vec::new(),
                cavities: Vec::new(),
                post_mean: DVector::zeros(0),
                post_cov: DMatrix::zeros(0, 0),
                sweeps: 0,
                max_delta: 0.0,
                converged: true,
            },
        }
    }

    fn assemble(
        base: FittedGp,
        dps: DerivativePointSet,
        opts: EpOptions,
        cond: Conditioned,
        run: EpRun,
        converged: bool,
    ) -> Self {
        let post = run.post;
        let mut sites = run.sites;
        let mut cavities = Vec::with_capacity(sites.len());
        for (i, site) in sites.iter_mut().enumerate() {
            let cav = cavity_of(post.mean[i], post.cov[(i, i)], site).unwrap_or(Cavity {
                mean: post.mean[i],
                var: post.cov[(i, i)],
            });
            let tilted = tilted_moments(cav, opts.nu, 1.0);
            site.log_norm = if site.precision > 0.0 {
                let s = cav.var + site.var();
                tilted.log_z
                    + 0.5 * (2.0 * std::f64::consts::PI * s).ln()
                    + (cav.mean - site.mean()).powi(2) / (2.0 * s)
            } else {
                f64::INFINITY
            };
            cavities.push(cav);
        }
        MonotonicGp {
            base,
            dps,
            opts,
            w: cond.w,
            prior_mean: cond.prior_mean,
            prior_cov: cond.prior_cov,
            deriv_jitter: cond.deriv_jitter,
            sqrt_tau: post.sqrt_tau,
            b_chol: Some(post.b_chol),
            alpha: post.alpha,
            state: EpState {
                sites,
                cavities,
                post_mean: post.mean,
                post_cov: post.cov,
                sweeps: run.sweeps,
                max_delta: run.max_delta,
                converged,
            },
        }
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        self.base.hyperparameters()
    }

    pub fn derivative_points(&self) -> &DerivativePointSet {
        &self.dps
    }

    pub fn state(&self) -> &EpState {
        &self.state
    }

    pub fn options(&self) -> &EpOptions {
        &self.opts
    }

    pub fn nu(&self) -> f64 {
        self.opts.nu
    }

    /// The unconstrained GP on the same data and hyperparameters.
    pub fn base(&self) -> &FittedGp {
        &self.base
    }

    /// Mean and covariance of the signed derivatives given `y`, before any
    /// site is applied.
    pub fn derivative_prior(&self) -> (&DVector<f64>, &DMatrix<f64>) {
        (&self.prior_mean, &self.prior_cov)
    }

    /// Diagonal jitter on the training-value rows and on the derivative rows
    /// of the joint prior, in that order.
    pub fn joint_jitter(&self) -> Vec<f64> {
        let mut j = self.base.factor().added.clone();
        j.extend_from_slice(&self.deriv_jitter);
        j
    }

    /// EP approximation of the log marginal likelihood.
    pub fn log_marginal(&self) -> Result<f64> {
        if !self.state.converged {
            return Err(GpError::NotConverged);
        }
        let base = self.base.log_marginal();
        let Some(b_chol) = &self.b_chol else {
            return Ok(base);
        };
        let m = &self.prior_mean;
        let sigma = &self.state.post_cov;
        let mut nlz = b_chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let k = m.len();
        let mut p = DVector::zeros(k);
        let mut q = DVector::zeros(k);
        let mut v = DVector::zeros(k);
        let mut ratio = DVector::zeros(k);
        for i in 0..k {
            let site = &self.state.sites[i];
            let cav = self.state.cavities[i];
            let tau_n = 1.0 / cav.var;
            let nu_n = cav.mean * tau_n;
            v[i] = sigma[(i, i)];
            p[i] = site.shift - m[i] * site.precision;
            q[i] = nu_n - m[i] * tau_n;
            ratio[i] = site.precision / tau_n;
            let z = cav.mean / (self.opts.nu * self.opts.nu + cav.var).sqrt();
            nlz -= log_probit(z);
            nlz -= 0.5 * ratio[i].ln_1p();
        }
        nlz -= 0.5 * p.dot(&(sigma * &p));
        nlz += 0.5 * v.dot(&p.component_mul(&p));
        let inner = (ratio.component_mul(&q) - &p * 2.0).component_mul(&v);
        nlz -= 0.5 * q.dot(&inner);
        Ok(base - nlz)
    }

    pub fn predict(&self, xq: &DMatrix<f64>) -> Result<PredictionSet> {
        self.predict_kind(xq, QueryKind::Value, VarianceKind::Latent)
    }

    pub fn predict_with(&self, xq: &DMatrix<f64>, var: VarianceKind) -> Result<PredictionSet> {
        self.predict_kind(xq, QueryKind::Value, var)
    }

    pub fn predict_derivative(&self, xq: &DMatrix<f64>, d: usize) -> Result<PredictionSet> {
        self.predict_kind(xq, QueryKind::Slope(d), VarianceKind::Latent)
    }

    fn predict_kind(
        &self,
        xq: &DMatrix<f64>,
        kind: QueryKind,
        var: VarianceKind,
    ) -> Result<PredictionSet> {
        if !self.state.converged {
            return Err(GpError::NotConverged);
        }
        let Some(b_chol) = &self.b_chol else {
            return match kind {
                QueryKind::Value => self.base.predict_with(xq, var),
                QueryKind::Slope(d) => self.base.predict_derivative(xq, d),
            };
        };
        let hp = self.base.hyperparameters();
        let x = self.base.x_train();
        let n = x.nrows();
        let m = self.dps.len();
        let kj = kernel::cross_covariance(xq, kind, x, &self.dps, hp, self.opts.exec)?;
        let kq = kj.columns(0, n);
        let ks = kj.columns(n, m);
        let vq = self.base.factor().solve_lower(&kq.transpose());
        let shift = match kind {
            QueryKind::Value => self.base.offset(),
            QueryKind::Slope(_) => 0.0,
        };
        let csq = ks - vq.transpose() * &self.w;
        let mean_stage1 = kq * self.base.alpha();
        let mean_stage2 = &csq * &self.alpha;
        let mean: Vec<f64> = (0..xq.nrows())
            .map(|i| mean_stage1[i] + mean_stage2[i] + shift)
            .collect();

        let mut sc = csq.transpose();
        for i in 0..m {
            sc.row_mut(i).scale_mut(self.sqrt_tau[i]);
        }
        let u = b_chol
            .l_dirty()
            .solve_lower_triangular(&sc)
            .ok_or(GpError::Conditioning { jitters: vec![0.0] })?;
        let prior = kernel::query_prior_variance(kind, hp);
        let noise = match (var, kind) {
            (VarianceKind::Observed, QueryKind::Value) => hp.noise_var(),
            _ => 0.0,
        };
        let variance = (0..xq.nrows())
            .map(|i| prior - vq.column(i).norm_squared() - u.column(i).norm_squared() + noise)
            .collect();
        Ok(PredictionSet::from_raw(mean, variance, hp.signal_var()))
    }

    /// Joint posterior `(μ, Σ)` over `[f(X); s ⊙ f'(X_m)]` for the centered
    /// outputs. The prior includes the diagonal jitter of [`Self::joint_jitter`].
    pub fn joint_posterior(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let hp = self.base.hyperparameters();
        let x = self.base.x_train();
        let n = x.nrows();
        let mut k = kernel::assemble_blocks_with(x, &self.dps, hp, self.opts.exec)?;
        for (i, j) in self.joint_jitter().iter().enumerate() {
            k[(i, i)] += j;
        }
        let kjf = k.columns(0, n).clone_owned();
        let l_inv_kfj = self.base.factor().solve_lower(&kjf.transpose());
        let cj = &k - l_inv_kfj.transpose() * &l_inv_kfj;
        let mj = &kjf * self.base.alpha();
        let Some(b_chol) = &self.b_chol else {
            return Ok((mj, cj));
        };
        let m = self.dps.len();
        let cjs = cj.columns(n, m).clone_owned();
        let mut sc = cjs.transpose();
        for i in 0..m {
            sc.row_mut(i).scale_mut(self.sqrt_tau[i]);
        }
        let u = b_chol
            .l_dirty()
            .solve_lower_triangular(&sc)
            .ok_or(GpError::Conditioning { jitters: vec![0.0] })?;
        let cov = &cj - u.transpose() * &u;
        let mean = mj + &cjs * &self.alpha;
        Ok((mean, cov))
    }
}
