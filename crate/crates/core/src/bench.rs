//! Regular-vs-monotonic benchmark harness.
//!
//! Every experiment is reduced to one [`Dataset`] whose training rows feed
//! both models and whose test rows hold the values the predictions are
//! scored against. For the synthetic generators the test rows are the
//! noiseless truth on a dense grid.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{
    self, hallpetch_mean, logistic, Column, CsvSchema, LogisticSampling, Dataset, DatasetError, Split, SplitRule,
    HALLPETCH_RANGE, LOGISTIC_RANGE,
};
use crate::ep_monotonic::{place_inducing, EpOptions, InducingPolicy, MonotonicGp};
use crate::error::GpError;
use crate::exec::Execution;
use crate::gp_regression::{FittedGp, GpOptions, PredictionSet, VarianceKind};
use crate::hyperopt::{fit_monotonic_from, fit_regular, OptimizationResult, OptimizerConfig};
use crate::kernel::{DerivativePointSet, Direction, Hyperparameters};
use crate::metrics::{coverage, r_squared, rmse, Z68, Z90};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Logistic,
    Hallpetch,
    Fatigue,
    Csv,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Logistic => "logistic",
            Experiment::Hallpetch => "hallpetch",
            Experiment::Fatigue => "fatigue",
            Experiment::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic" => Ok(Experiment::Logistic),
            "hallpetch" => Ok(Experiment::Hallpetch),
            "fatigue" => Ok(Experiment::Fatigue),
            "csv" => Ok(Experiment::Csv),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

/// A constraint on one named input column, written `name:+` or `name:-`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneFlag {
    pub column: String,
    pub direction: Direction,
}

impl std::str::FromStr for MonotoneFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (column, dir) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected `column:+` or `column:-`, got `{s}`"))?;
        let direction =
            Direction::parse(dir.trim()).ok_or_else(|| format!("bad direction `{dir}` in `{s}`"))?;
        if column.trim().is_empty() {
            return Err(format!("missing column name in `{s}`"));
        }
        Ok(MonotoneFlag {
            column: column.trim().to_string(),
            direction,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSource {
    pub path: PathBuf,
    pub schema: CsvSchema,
    /// Used when the schema has no split column, e.g. `kT>0.75,t>=1000`.
    pub test_where: Option<String>,
    pub monotone: Vec<MonotoneFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub seed: u64,
    /// Training size for the generators; 10 for logistic, 20 for Hall-Petch.
    pub n: Option<usize>,
    pub noise_scale: f64,
    pub sampling: LogisticSampling,
    pub log_base: f64,
    /// Evaluation grid size per axis product; 200 by default.
    pub grid_points: usize,
    /// Noiseless test points for the synthetic experiments.
    pub test_points: usize,
    pub ep: EpOptions,
    pub inducing: InducingPolicy,
    pub optimizer: OptimizerConfig,
    pub csv: Option<CsvSource>,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            n: None,
            noise_scale: 1.0,
            sampling: LogisticSampling::Equispaced,
            log_base: 10.0,
            grid_points: 200,
            test_points: 100,
            ep: EpOptions::centered(),
            inducing: InducingPolicy::default(),
            optimizer: OptimizerConfig::default(),
            csv: None,
            exec: Execution::default(),
        }
    }
}

impl BenchConfig {
    /// Propagates `exec` into the nested option structs.
    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self.ep.exec = exec;
        self.optimizer.exec = exec;
        self
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error("{model} model: {source}")]
    Fit {
        model: &'static str,
        #[source]
        source: GpError,
    },
}

impl BenchError {
    fn fit(model: &'static str) -> impl FnOnce(GpError) -> BenchError {
        move |source| BenchError::Fit { model, source }
    }
}

/// Per-model scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub model: String,
    pub hyperparameters: Hyperparameters,
    /// Log marginal likelihood, or its EP approximation.
    pub log_marginal: f64,
    pub rmse: f64,
    /// RMSE after mapping predictions back through `base^y` (fatigue only).
    pub rmse_raw: Option<f64>,
    /// `None` when the test truth is constant.
    pub r_squared: Option<f64>,
    pub mean_std: f64,
    pub max_std: f64,
    pub grid_mean_std: f64,
    pub coverage_90: f64,
    pub coverage_68: f64,
    pub violations_inside: usize,
    pub violations_outside: usize,
    pub ep_sweeps: Option<usize>,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

/// Objective and grid std of each model at the optimum of restart `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartComparison {
    pub restart: usize,
    pub regular_value: Option<f64>,
    pub monotonic_value: Option<f64>,
    pub regular_grid_mean_std: Option<f64>,
    pub monotonic_grid_mean_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub experiment: Experiment,
    pub data_hash: String,
    pub n_train: usize,
    pub n_test: usize,
    pub n_inducing: usize,
    pub constraints: Vec<MonotoneFlag>,
    /// Whether coverage used the noisy predictive std (observed test data)
    /// rather than the latent std (noiseless truth).
    pub coverage_includes_noise: bool,
    pub regular: ModelReport,
    pub monotonic: ModelReport,
    pub restarts: Vec<RestartComparison>,
    pub config: BenchConfig,
}

/// Evaluation grid with both models' predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    pub inputs: Vec<Column>,
    /// Axis values; points are their tensor product with the last axis fastest.
    pub axes: Vec<Vec<f64>>,
    pub x: DMatrix<f64>,
    pub regular: PredictionSet,
    pub monotonic: PredictionSet,
}

impl PredictionGrid {
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.inputs.iter().map(Column::header).collect();
        header.extend(
            ["regular_mean", "regular_std", "monotonic_mean", "monotonic_std"].map(String::from),
        );
        w.write_record(&header).expect("in-memory write");
        let (rs, ms) = (self.regular.std(), self.monotonic.std());
        for r in 0..self.x.nrows() {
            let mut rec: Vec<String> = self.x.row(r).iter().map(f64::to_string).collect();
            rec.push(self.regular.mean[r].to_string());
            rec.push(rs[r].to_string());
            rec.push(self.monotonic.mean[r].to_string());
            rec.push(ms[r].to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

struct Problem {
    data: Dataset,
    constraints: Vec<(usize, Direction)>,
    axes: Vec<Vec<f64>>,
    observed_truth: bool,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn tensor_grid(axes: &[Vec<f64>]) -> DMatrix<f64> {
    let total: usize = axes.iter().map(Vec::len).product();
    let d = axes.len();
    let mut x = DMatrix::zeros(total, d);
    for r in 0..total {
        let mut rem = r;
        for j in (0..d).rev() {
            let n = axes[j].len();
            x[(r, j)] = axes[j][rem % n];
            rem /= n;
        }
    }
    x
}

/// Training rows from `train` followed by truth rows at `xs`.
fn with_truth(train: Dataset, xs: &[f64], truth: impl Fn(f64) -> f64) -> Result<Dataset, BenchError> {
    let n = train.len();
    let m = xs.len();
    let x = DMatrix::from_fn(n + m, 1, |r, _| if r < n { train.x()[(r, 0)] } else { xs[r - n] });
    let mut y = train.y().to_vec();
    y.extend(xs.iter().map(|&v| truth(v)));
    let mut splits = vec![Split::Train; n];
    splits.extend(std::iter::repeat_n(Split::Test, m));
    Ok(Dataset::new(
        train.inputs().to_vec(),
        x,
        train.output().clone(),
        y,
        splits,
    )?
    .with_provenance(train.provenance.clone()))
}

fn build_problem(exp: Experiment, cfg: &BenchConfig) -> Result<Problem, BenchError> {
    if cfg.grid_points < 2 || cfg.test_points < 1 {
        return Err(BenchError::Config("grid_points must be ≥ 2 and test_points ≥ 1".into()));
    }
    match exp {
        Experiment::Logistic => {
            let n = cfg.n.unwrap_or(10);
            if n < 2 {
                return Err(BenchError::Config("logistic needs n ≥ 2".into()));
            }
            let (lo, hi) = LOGISTIC_RANGE;
            let data = with_truth(
                datasets::gen_logistic_with(n, cfg.seed, 0.1, cfg.sampling),
                &linspace(lo, hi, cfg.test_points),
                logistic,
            )?;
            Ok(Problem {
                data,
                constraints: vec![(0, Direction::Increasing)],
                axes: vec![linspace(lo, hi, cfg.grid_points)],
                observed_truth: false,
            })
        }
        Experiment::Hallpetch => {
            let n = cfg.n.unwrap_or(20);
            if n < 2 {
                return Err(BenchError::Config("hallpetch needs n ≥ 2".into()));
            }
            let (lo, hi) = HALLPETCH_RANGE;
            let data = with_truth(
                datasets::gen_hallpetch(n, cfg.seed, cfg.noise_scale),
                &linspace(lo, hi, cfg.test_points),
                hallpetch_mean,
            )?;
            Ok(Problem {
                data,
                constraints: vec![(0, Direction::Decreasing)],
                axes: vec![linspace(lo, hi, cfg.grid_points)],
                observed_truth: false,
            })
        }
        Experiment::Fatigue => {
            if !(cfg.log_base > 1.0) {
                return Err(BenchError::Config("log_base must exceed 1".into()));
            }
            Ok(Problem {
                data: datasets::fatigue_s355n_with_base(cfg.log_base),
                constraints: vec![(0, Direction::Decreasing)],
                axes: vec![linspace(320.0, 700.0, cfg.grid_points)],
                observed_truth: true,
            })
        }
        Experiment::Csv => {
            let src = cfg
                .csv
                .as_ref()
                .ok_or_else(|| BenchError::Config("csv experiment needs a csv source".into()))?;
            let mut data = datasets::load_csv(&src.path, &src.schema)?;
            match (&src.schema.split, &src.test_where) {
                (Some(_), None) => {}
                (None, Some(rule)) => SplitRule::parse(rule)?.apply(&mut data)?,
                (Some(_), Some(_)) => {
                    return Err(BenchError::Config(
                        "give either a split column or a split rule, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(BenchError::Config(
                        "csv experiment needs a split column or a split rule".into(),
                    ))
                }
            }
            if data.count(Split::Train) < 2 || data.count(Split::Test) < 1 {
                return Err(BenchError::Config(format!(
                    "split leaves {} training and {} test rows",
                    data.count(Split::Train),
                    data.count(Split::Test)
                )));
            }
            if src.monotone.is_empty() {
                return Err(BenchError::Config("no monotone columns given".into()));
            }
            let constraints = src
                .monotone
                .iter()
                .map(|f| {
                    data.input_index(&f.column)
                        .map(|i| (i, f.direction))
                        .ok_or_else(|| BenchError::Data(DatasetError::MissingColumn(f.column.clone())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let d = data.dim();
            let per_axis = ((cfg.grid_points as f64).powf(1.0 / d as f64).ceil() as usize).max(2);
            let axes = (0..d)
                .map(|j| {
                    let c = data.x().column(j);
                    linspace(c.min(), c.max(), per_axis)
                })
                .collect();
            Ok(Problem {
                data,
                constraints,
                axes,
                observed_truth: true,
            })
        }
    }
}

/// Counts grid steps along each constrained axis whose mean slope has the
/// wrong sign, split by whether both endpoints lie in the training box.
pub fn count_violations(
    axes: &[Vec<f64>],
    mean: &[f64],
    constraints: &[(usize, Direction)],
    train_box: &[(f64, f64)],
    y_range: f64,
) -> (usize, usize) {
    let d = axes.len();
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * axes[j + 1].len();
    }
    let total = mean.len();
    let (mut inside, mut outside) = (0, 0);
    let idx_of = |r: usize, j: usize| (r / strides[j]) % axes[j].len();
    for &(dim, dir) in constraints {
        let (lo, hi) = train_box[dim];
        let tol = 1e-3 * y_range / (hi - lo).max(f64::MIN_POSITIVE);
        for r in 0..total {
            let k = idx_of(r, dim);
            if k + 1 >= axes[dim].len() {
                continue;
            }
            let next = r + strides[dim];
            let slope = (mean[next] - mean[r]) / (axes[dim][k + 1] - axes[dim][k]);
            if slope * dir.sign() >= -tol {
                continue;
            }
            let in_box = (0..d).all(|j| {
                let (a, b) = train_box[j];
                let v0 = axes[j][idx_of(r, j)];
                let v1 = axes[j][idx_of(next, j)];
                v0 >= a && v0 <= b && v1 >= a && v1 <= b
            });
            if in_box {
                inside += 1;
            } else {
                outside += 1;
            }
        }
    }
    (inside, outside)
}

fn bounding_box(x: &DMatrix<f64>) -> Vec<(f64, f64)> {
    (0..x.ncols())
        .map(|j| (x.column(j).min(), x.column(j).max()))
        .collect()
}

fn mean_of(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Scored {
    report: ModelReport,
    grid: PredictionSet,
}

trait Predictor {
    fn predict_kind(&self, xq: &DMatrix<f64>, var: VarianceKind) -> crate::Result<PredictionSet>;
}

impl Predictor for FittedGp {
    fn predict_kind(&self, xq: &DMatrix<f64>, var: VarianceKind) -> crate::Result<PredictionSet> {
        self.predict_with(xq, var)
    }
}

impl Predictor for MonotonicGp {
    fn predict_kind(&self, xq: &DMatrix<f64>, var: VarianceKind) -> crate::Result<PredictionSet> {
        self.predict_with(xq, var)
    }
}

struct ScoreCtx<'a> {
    problem: &'a Problem,
    x_test: DMatrix<f64>,
    y_test: Vec<f64>,
    raw_test: Option<Vec<f64>>,
    grid_x: DMatrix<f64>,
    train_box: Vec<(f64, f64)>,
    y_range: f64,
    log_base: f64,
}

#[allow(clippy::too_many_arguments)]
fn score<P: Predictor>(
    ctx: &ScoreCtx,
    model: &'static str,
    gp: &P,
    hp: Hyperparameters,
    log_marginal: f64,
    ep_sweeps: Option<usize>,
    fit_seconds: f64,
) -> Result<Scored, BenchError> {
    let wrap = BenchError::fit;
    let t = Instant::now();
    let test = gp.predict_kind(&ctx.x_test, VarianceKind::Latent).map_err(wrap(model))?;
    let grid = gp.predict_kind(&ctx.grid_x, VarianceKind::Latent).map_err(wrap(model))?;
    let predict_seconds = t.elapsed().as_secs_f64();
    let cov_std = if ctx.problem.observed_truth {
        gp.predict_kind(&ctx.x_test, VarianceKind::Observed)
            .map_err(wrap(model))?
            .std()
    } else {
        test.std()
    };
    let std = test.std();
    let rmse_v = rmse(&test.mean, &ctx.y_test).map_err(wrap(model))?;
    let rmse_raw = match &ctx.raw_test {
        Some(raw) => {
            let back: Vec<f64> = test.mean.iter().map(|m| ctx.log_base.powf(*m)).collect();
            Some(rmse(&back, raw).map_err(wrap(model))?)
        }
        None => None,
    };
    let (inside, outside) = count_violations(
        &ctx.problem.axes,
        &grid.mean,
        &ctx.problem.constraints,
        &ctx.train_box,
        ctx.y_range,
    );
    let report = ModelReport {
        model: model.to_string(),
        hyperparameters: hp,
        log_marginal,
        rmse: rmse_v,
        rmse_raw,
        r_squared: r_squared(&test.mean, &ctx.y_test).ok(),
        mean_std: mean_of(&std),
        max_std: std.iter().fold(0.0f64, |a, b| a.max(*b)),
        grid_mean_std: mean_of(&grid.std()),
        coverage_90: coverage(&test.mean, &cov_std, &ctx.y_test, Z90).map_err(wrap(model))?,
        coverage_68: coverage(&test.mean, &cov_std, &ctx.y_test, Z68).map_err(wrap(model))?,
        violations_inside: inside,
        violations_outside: outside,
        ep_sweeps,
        fit_seconds,
        predict_seconds,
    };
    Ok(Scored { report, grid })
}

fn restart_hp(res: &OptimizationResult, k: usize) -> Option<Hyperparameters> {
    res.restarts
        .get(k)?
        .as_ref()
        .and_then(|t| Hyperparameters::from_log(&t.best).ok())
}

fn restart_value(res: &OptimizationResult, k: usize) -> Option<f64> {
    res.restarts.get(k)?.as_ref().map(|t| t.best_value)
}

/// Fits both models on the training split and scores them.
pub fn run_benchmark(
    exp: Experiment,
    cfg: &BenchConfig,
) -> Result<(BenchmarkReport, PredictionGrid), BenchError> {
    let cfg = cfg.clone().with_exec(cfg.exec);
    cfg.optimizer.validate().map_err(|e| BenchError::Config(e.to_string()))?;
    let problem = build_problem(exp, &cfg)?;
    let data = &problem.data;
    let (x, y) = data.train();
    let (x_test, y_test) = data.test();
    let test_rows = data.rows(Split::Test);
    let raw_test = match exp {
        Experiment::Fatigue => data
            .aux_column("N_exp")
            .map(|raw| test_rows.iter().map(|&i| raw[i]).collect()),
        _ => None,
    };
    let ctx = ScoreCtx {
        problem: &problem,
        x_test,
        y_test: y_test.iter().copied().collect(),
        raw_test,
        grid_x: tensor_grid(&problem.axes),
        train_box: bounding_box(&x),
        y_range: y.max() - y.min(),
        log_base: cfg.log_base,
    };

    let gp_opts = GpOptions {
        center: cfg.ep.center,
        exec: cfg.exec,
    };

    let t = Instant::now();
    let (reg_hp, reg_opt) =
        fit_regular(&x, &y, gp_opts.center, &cfg.optimizer).map_err(BenchError::fit("regular"))?;
    let reg = FittedGp::fit_with(&x, &y, &reg_hp, gp_opts).map_err(BenchError::fit("regular"))?;
    let reg_time = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let dps = place_inducing(&x, &problem.constraints, cfg.inducing)
        .map_err(BenchError::fit("monotonic"))?;
    let (mono_hp, mono_opt) =
        fit_monotonic_from(&x, &y, &dps, &cfg.ep, &cfg.optimizer, std::slice::from_ref(&reg_hp))
            .map_err(BenchError::fit("monotonic"))?;
    let mono = MonotonicGp::fit(&x, &y, &dps, &mono_hp, &cfg.ep).map_err(BenchError::fit("monotonic"))?;
    let mono_lz = mono.log_marginal().map_err(BenchError::fit("monotonic"))?;
    let mono_time = t.elapsed().as_secs_f64();

    let reg_lm = reg.log_marginal();
    let reg_s = score(&ctx, "regular", &reg, reg_hp, reg_lm, None, reg_time)?;
    let mono_s = score(
        &ctx,
        "monotonic",
        &mono,
        mono_hp,
        mono_lz,
        Some(mono.state().sweeps()),
        mono_time,
    )?;

    let restarts = restart_comparisons(&ctx, &x, &y, &dps, &cfg, gp_opts, &reg_opt, &mono_opt);

    let names: Vec<String> = data.inputs().iter().map(|c| c.name.clone()).collect();
    let report = BenchmarkReport {
        experiment: exp,
        data_hash: data.checksum(),
        n_train: x.nrows(),
        n_test: ctx.y_test.len(),
        n_inducing: dps.len(),
        constraints: problem
            .constraints
            .iter()
            .map(|&(d, direction)| MonotoneFlag {
                column: names[d].clone(),
                direction,
            })
            .collect(),
        coverage_includes_noise: problem.observed_truth,
        regular: reg_s.report,
        monotonic: mono_s.report,
        restarts,
        config: cfg.clone(),
    };
    let grid = PredictionGrid {
        inputs: data.inputs().to_vec(),
        axes: problem.axes.clone(),
        x: ctx.grid_x.clone(),
        regular: reg_s.grid,
        monotonic: mono_s.grid,
    };
    Ok((report, grid))
}

#[allow(clippy::too_many_arguments)]
fn restart_comparisons(
    ctx: &ScoreCtx,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    dps: &DerivativePointSet,
    cfg: &BenchConfig,
    gp_opts: GpOptions,
    reg_opt: &OptimizationResult,
    mono_opt: &OptimizationResult,
) -> Vec<RestartComparison> {
    let n = reg_opt.restarts.len().max(mono_opt.restarts.len());
    cfg.exec.map(n, |k| {
        let reg_std = restart_hp(reg_opt, k)
            .and_then(|hp| FittedGp::fit_with(x, y, &hp, gp_opts).ok())
            .and_then(|gp| gp.predict(&ctx.grid_x).ok())
            .map(|p| mean_of(&p.std()));
        let mono_std = restart_hp(mono_opt, k)
            .and_then(|hp| MonotonicGp::fit(x, y, dps, &hp, &cfg.ep).ok())
            .and_then(|gp| gp.predict(&ctx.grid_x).ok())
            .map(|p| mean_of(&p.std()));
        RestartComparison {
            restart: k,
            regular_value: restart_value(reg_opt, k),
            monotonic_value: restart_value(mono_opt, k),
            regular_grid_mean_std: reg_std,
            monotonic_grid_mean_std: mono_std,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRow {
    pub seed: u64,
    pub regular_rmse: f64,
    pub monotonic_rmse: f64,
}

/// Runs the experiment once per seed. Seeds run concurrently under the
/// parallel execution mode.
pub fn seed_sweep(
    exp: Experiment,
    cfg: &BenchConfig,
    seeds: &[u64],
) -> Result<Vec<SeedRow>, BenchError> {
    let rows = cfg.exec.map(seeds.len(), |i| {
        let mut c = cfg.clone();
        c.seed = seeds[i];
        c.optimizer.seed = seeds[i];
        run_benchmark(exp, &c).map(|(r, _)| SeedRow {
            seed: seeds[i],
            regular_rmse: r.regular.rmse,
            monotonic_rmse: r.monotonic.rmse,
        })
    });
    rows.into_iter().collect()
}
