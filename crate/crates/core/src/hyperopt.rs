//! Log-space hyperparameter search: box-projected L-BFGS ascent with seeded
//! multi-restart, plus the two GP objectives it is used with.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ep_monotonic::{EpOptions, MonotonicGp};
use crate::error::{GpError, Result};
use crate::exec::Execution;
use crate::gp_regression::log_marginal_and_grad;
use crate::kernel::{DerivativePointSet, Hyperparameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub restarts: usize,
    /// Stop when the projected gradient's max-norm drops below this.
    pub convergence_tol: f64,
    pub seed: u64,
    /// Half-width of the log-space box around the initial point.
    pub bound_width: f64,
    /// Explicit `(lower, upper)` per parameter; overrides `bound_width`.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Number of correction pairs kept by L-BFGS.
    pub memory: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 6000,
            restarts: 5,
            convergence_tol: 1e-6,
            seed: 0,
            bound_width: 10.0,
            bounds: None,
            memory: 10,
            exec: Execution::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(GpError::InvalidInput("max_iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(GpError::InvalidInput("restarts must be at least 1".into()));
        }
        if !(self.bound_width > 0.0) {
            return Err(GpError::InvalidInput("bound_width must be positive".into()));
        }
        Ok(())
    }

    fn box_for(&self, init: &[f64]) -> Result<Vec<(f64, f64)>> {
        match &self.bounds {
            Some(b) if b.len() != init.len() => Err(GpError::Shape(format!(
                "{} bounds for {} parameters",
                b.len(),
                init.len()
            ))),
            Some(b) => Ok(b.clone()),
            None => Ok(init
                .iter()
                .map(|v| (v - self.bound_width, v + self.bound_width))
                .collect()),
        }
    }
}

/// A scalar field to be maximized. `None` signals a failed or non-finite
/// evaluation.
pub trait Objective: Sync {
    fn value_and_grad(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)>;
}

pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)> + Sync,
{
    fn value_and_grad(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        (self.0)(theta)
    }
}

fn finite_eval<O: Objective + ?Sized>(obj: &O, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
    obj.value_and_grad(theta)
        .filter(|(v, g)| v.is_finite() && g.iter().all(|x| x.is_finite()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    pub start: Vec<f64>,
    /// Objective after each accepted step, starting with the initial value.
    pub values: Vec<f64>,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best: Vec<f64>,
    pub value: f64,
    pub best_restart: usize,
    /// `None` where the restart's starting point was not finite.
    pub restarts: Vec<Option<RestartTrace>>,
}

impl OptimizationResult {
    pub fn trace(&self) -> &[f64] {
        self.restarts[self.best_restart]
            .as_ref()
            .map(|t| t.values.as_slice())
            .unwrap_or(&[])
    }
}

fn clamp_into(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Starting points: the initial vector, then log-normal perturbations.
pub fn restart_points(init: &[f64], cfg: &OptimizerConfig) -> Result<Vec<Vec<f64>>> {
    restart_points_with(init, &[], cfg)
}

/// Like [`restart_points`], with `extra` taking the slots right after
/// `init`. The total stays at `cfg.restarts`.
pub fn restart_points_with(
    init: &[f64],
    extra: &[Vec<f64>],
    cfg: &OptimizerConfig,
) -> Result<Vec<Vec<f64>>> {
    let bounds = cfg.box_for(init)?;
    if let Some(e) = extra.iter().find(|e| e.len() != init.len()) {
        return Err(GpError::Shape(format!(
            "start of length {} for {} parameters",
            e.len(),
            init.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 0.5).expect("valid normal");
    let mut out = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        // draws happen for every slot so the perturbations don't depend on `extra`
        let jitter: Vec<f64> = init.iter().map(|_| normal.sample(&mut rng)).collect();
        let mut p: Vec<f64> = if r == 0 {
            init.to_vec()
        } else if let Some(e) = extra.get(r - 1) {
            e.clone()
        } else {
            init.iter().zip(&jitter).map(|(v, j)| v + j).collect()
        };
        clamp_into(&mut p, &bounds);
        out.push(p);
    }
    Ok(out)
}

/// Maximizes `obj` from `init` and its perturbed restarts.
pub fn optimize<O: Objective + ?Sized>(
    obj: &O,
    init: &[f64],
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_with(obj, init, &[], cfg)
}

/// [`optimize`] with additional explicit starting points.
pub fn optimize_with<O: Objective + ?Sized>(
    obj: &O,
    init: &[f64],
    extra: &[Vec<f64>],
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let bounds = cfg.box_for(init)?;
    let starts = restart_points_with(init, extra, cfg)?;
    let traces: Vec<Option<RestartTrace>> =
        cfg.exec.map(starts.len(), |r| lbfgs_ascent(obj, &starts[r], &bounds, cfg));
    let mut best: Option<(usize, &RestartTrace)> = None;
    for (i, t) in traces.iter().enumerate() {
        if let Some(t) = t {
            if best.is_none_or(|(_, b)| t.best_value > b.best_value) {
                best = Some((i, t));
            }
        }
    }
    let (best_restart, b) = best.ok_or(GpError::Initialization)?;
    Ok(OptimizationResult {
        best: b.best.clone(),
        value: b.best_value,
        best_restart,
        restarts: traces.clone(),
    })
}

fn projected_grad(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    // g is the gradient of the minimized function.
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((xi, gi), (lo, hi))| {
            if (*xi <= *lo && *gi > 0.0) || (*xi >= *hi && *gi < 0.0) {
                0.0
            } else {
                *gi
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

fn lbfgs_ascent<O: Objective + ?Sized>(
    obj: &O,
    start: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Option<RestartTrace> {
    // Minimize f = −objective.
    let eval = |x: &[f64]| finite_eval(obj, x).map(|(v, g)| (-v, g.into_iter().map(|x| -x).collect::<Vec<_>>()));
    let mut x = start.to_vec();
    let (mut fx, mut gx) = eval(&x)?;
    let mut values = vec![-fx];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        let pg = projected_grad(&x, &gx, bounds);
        let pg_norm = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if pg_norm < cfg.convergence_tol {
            converged = true;
            break;
        }
        let mut dir: Vec<f64> = two_loop(&pg, &hist).into_iter().map(|v| -v).collect();
        for (d, p) in dir.iter_mut().zip(&pg) {
            if *p == 0.0 {
                *d = 0.0;
            }
        }
        if dot(&dir, &pg) >= 0.0 {
            hist.clear();
            dir = pg.iter().map(|v| -v).collect();
        }
        let mut step = if hist.is_empty() {
            (1.0 / pg_norm).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        'search: for attempt in 0..2 {
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
                clamp_into(&mut trial, bounds);
                let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                if moved.iter().all(|m| *m == 0.0) {
                    break;
                }
                if let Some((ft, gt)) = eval(&trial) {
                    if ft <= fx + ARMIJO_C1 * dot(&gx, &moved) {
                        accepted = Some((trial, ft, gt));
                        break 'search;
                    }
                }
                step *= 0.5;
            }
            if attempt == 0 && !hist.is_empty() {
                hist.clear();
                dir = pg.iter().map(|v| -v).collect();
                step = (1.0 / pg_norm).min(1.0);
            } else {
                break;
            }
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > cfg.memory {
                hist.pop_front();
            }
        }
        let stalled = (fx - fn_).abs() <= 1e-15 * (1.0 + fx.abs());
        x = xn;
        fx = fn_;
        gx = gn;
        values.push(-fx);
        if stalled {
            converged = true;
            break;
        }
    }
    Some(RestartTrace {
        start: start.to_vec(),
        values,
        best: x,
        best_value: -fx,
        converged,
    })
}

fn sample_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Data-driven starting hyperparameters.
pub fn default_init(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Hyperparameters> {
    if x.nrows() < 2 || y.len() != x.nrows() {
        return Err(GpError::InvalidInput(
            "default initialization needs at least two matching rows".into(),
        ));
    }
    let ys: Vec<f64> = y.iter().copied().collect();
    let mean = y.mean();
    let mut eta = sample_std(&ys);
    let eta_floor = 1e-6 * (1.0 + mean.abs());
    if !(eta > eta_floor) {
        eta = eta_floor;
    }
    let ranges: Vec<f64> = (0..x.ncols())
        .map(|j| {
            let c = x.column(j);
            c.max() - c.min()
        })
        .collect();
    let overall = ranges.iter().fold(0.0f64, |m, r| m.max(*r));
    let overall = if overall > 0.0 { overall } else { 1.0 };
    let rho = ranges
        .iter()
        .map(|r| (r / 2.0).max(1e-6 * overall))
        .collect();
    Hyperparameters::new(eta, rho, 0.1 * eta)
}

fn centered(y: &DVector<f64>) -> DVector<f64> {
    let m = y.mean();
    y.map(|v| v - m)
}

/// Classical log marginal likelihood on centered outputs with its analytic
/// gradient.
pub struct RegularObjective<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: DVector<f64>,
}

impl<'a> RegularObjective<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &DVector<f64>, center: bool) -> Self {
        RegularObjective {
            x,
            y: if center { centered(y) } else { y.clone() },
        }
    }
}

impl Objective for RegularObjective<'_> {
    fn value_and_grad(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let hp = Hyperparameters::from_log(theta).ok()?;
        log_marginal_and_grad(self.x, &self.y, &hp).ok()
    }
}

/// Central-difference step in log-space for the EP objective.
pub const EP_FD_STEP: f64 = 1e-4;

/// EP log marginal likelihood with central finite-difference gradients.
pub struct MonotonicObjective<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: &'a DVector<f64>,
    pub dps: &'a DerivativePointSet,
    pub opts: EpOptions,
}

impl MonotonicObjective<'_> {
    pub fn value(&self, theta: &[f64]) -> Option<f64> {
        let hp = Hyperparameters::from_log(theta).ok()?;
        let gp = MonotonicGp::fit(self.x, self.y, self.dps, &hp, &self.opts).ok()?;
        gp.log_marginal().ok().filter(|v| v.is_finite())
    }
}

impl Objective for MonotonicObjective<'_> {
    fn value_and_grad(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let v = self.value(theta)?;
        let mut g = Vec::with_capacity(theta.len());
        let mut t = theta.to_vec();
        for i in 0..theta.len() {
            t[i] = theta[i] + EP_FD_STEP;
            let up = self.value(&t)?;
            t[i] = theta[i] - EP_FD_STEP;
            let down = self.value(&t)?;
            t[i] = theta[i];
            g.push((up - down) / (2.0 * EP_FD_STEP));
        }
        Some((v, g))
    }
}

/// Optimized classical hyperparameters.
pub fn fit_regular(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    center: bool,
    cfg: &OptimizerConfig,
) -> Result<(Hyperparameters, OptimizationResult)> {
    let init = default_init(x, y)?;
    let obj = RegularObjective::new(x, y, center);
    let res = optimize(&obj, &init.to_log(), cfg)?;
    Ok((Hyperparameters::from_log(&res.best)?, res))
}

/// Optimized hyperparameters for the constrained model.
pub fn fit_monotonic(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    dps: &DerivativePointSet,
    opts: &EpOptions,
    cfg: &OptimizerConfig,
) -> Result<(Hyperparameters, OptimizationResult)> {
    fit_monotonic_from(x, y, dps, opts, cfg, &[])
}

/// [`fit_monotonic`] with extra starting hyperparameters, e.g. the
/// classical optimum.
pub fn fit_monotonic_from(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    dps: &DerivativePointSet,
    opts: &EpOptions,
    cfg: &OptimizerConfig,
    starts: &[Hyperparameters],
) -> Result<(Hyperparameters, OptimizationResult)> {
    let init = default_init(x, y)?;
    let extra: Vec<Vec<f64>> = starts.iter().map(Hyperparameters::to_log).collect();
    let obj = MonotonicObjective {
        x,
        y,
        dps,
        opts: *opts,
    };
    let res = optimize_with(&obj, &init.to_log(), &extra, cfg)?;
    Ok((Hyperparameters::from_log(&res.best)?, res))
}
