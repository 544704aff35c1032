use std::path::{Path, PathBuf};

use monogp::bench::{run_benchmark, seed_sweep, BenchConfig, BenchmarkReport, CsvSource, Experiment, ModelReport, SeedRow};
use monogp::datasets::{gen_hallpetch, gen_logistic_with, to_csv_bytes, Column, CsvSchema};
use monogp::ep_monotonic::{place_inducing, MonotonicGp};
use monogp::gp_regression::{FittedGp, GpOptions, PredictionSet};
use monogp::hyperopt::{fit_monotonic_from, fit_regular, OptimizationResult};
use monogp::kernel::Hyperparameters;
use monogp::metrics::rmse;
use monogp::Execution;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::artifact::{ModelArtifact, ModelKind};
use crate::config::{env_seed, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{write_atomic, write_json};
use crate::{BenchmarkArgs, FitArgs, GenerateArgs, GeneratorName, PredictArgs};

fn exec_mode(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn config_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?,
    };
    let n = a.n.unwrap_or(match a.name {
        GeneratorName::Logistic => 10,
        GeneratorName::Hallpetch => 20,
    });
    if n < 2 {
        return Err(CliError::Config(format!("--n must be at least 2, got {n}")));
    }
    if !(a.noise_scale.is_finite() && a.noise_scale >= 0.0) {
        return Err(CliError::Config(format!(
            "--noise-scale must be finite and non-negative, got {}",
            a.noise_scale
        )));
    }
    let data = match a.name {
        GeneratorName::Logistic => gen_logistic_with(n, seed, 0.1, a.sampling.into()),
        GeneratorName::Hallpetch => gen_hallpetch(n, seed, a.noise_scale),
    };
    write_atomic(&a.out, &to_csv_bytes(&data))?;
    print_json(&json!({
        "path": a.out.display().to_string(),
        "rows": data.len(),
        "sha256": data.checksum(),
    }));
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitSummary {
    model: ModelKind,
    model_file: String,
    data_hash: String,
    seed: u64,
    n_train: usize,
    n_test: usize,
    hyperparameters: Hyperparameters,
    log_marginal: f64,
    best_restart: usize,
    restarts: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_inducing: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ep_sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_rmse: Option<f64>,
}

struct FitCtx<'a> {
    data_hash: &'a str,
    seed: u64,
    n_train: usize,
    x_test: &'a DMatrix<f64>,
    y_test: Vec<f64>,
    out_dir: &'a Path,
}

impl FitCtx<'_> {
    fn finish(
        &self,
        art: &ModelArtifact,
        res: &OptimizationResult,
        pred: impl FnOnce(&DMatrix<f64>) -> monogp::Result<PredictionSet>,
    ) -> Result<FitSummary> {
        let test_rmse = if self.y_test.is_empty() {
            None
        } else {
            Some(rmse(&pred(self.x_test)?.mean, &self.y_test)?)
        };
        let name = art.kind.name();
        let model_file = format!("{name}.model.json");
        let mono = art.monotonic.as_ref();
        let summary = FitSummary {
            model: art.kind,
            model_file: model_file.clone(),
            data_hash: self.data_hash.into(),
            seed: self.seed,
            n_train: self.n_train,
            n_test: self.y_test.len(),
            hyperparameters: art.hyperparameters.clone(),
            log_marginal: art.log_marginal,
            best_restart: res.best_restart,
            restarts: res.restarts.len(),
            converged: res
                .restarts
                .get(res.best_restart)
                .and_then(Option::as_ref)
                .is_some_and(|t| t.converged),
            n_inducing: mono.map(|m| m.dims.len()),
            ep_sweeps: mono.map(|m| m.sweeps),
            test_rmse,
        };
        write_json(&self.out_dir.join(model_file), art)?;
        write_json(&self.out_dir.join(format!("{name}.summary.json")), &summary)?;
        Ok(summary)
    }
}

pub fn fit(a: FitArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(nu) = a.nu {
        cfg.ep.nu = nu;
    }
    let exec = exec_mode(a.sequential);
    cfg.ep.exec = exec;
    cfg.optimizer.exec = exec;
    let seed = cfg.resolve_seed(a.seed)?;
    cfg.optimizer.seed = seed;

    let data = cfg.load_data(seed, &config_dir(&a.config))?;
    let constraints = cfg.constraints(&data)?;
    let (x, y) = data.train();
    if x.nrows() < 2 {
        return Err(CliError::Config(format!("need at least 2 training rows, got {}", x.nrows())));
    }
    let (x_test, y_test) = data.test();
    let data_hash = data.checksum();
    let out_dir = a.out_dir.unwrap_or_else(|| cfg.out_dir.clone());
    let ctx = FitCtx {
        data_hash: &data_hash,
        seed,
        n_train: x.nrows(),
        x_test: &x_test,
        y_test: y_test.iter().copied().collect(),
        out_dir: &out_dir,
    };
    let center = cfg.ep.center;
    let mut summaries = Vec::new();

    let (reg_hp, reg_res) = fit_regular(&x, &y, center, &cfg.optimizer)?;
    if cfg.model.regular() {
        let gp = FittedGp::fit_with(&x, &y, &reg_hp, GpOptions { center, exec })?;
        let art = ModelArtifact::regular(&gp, center, data.inputs(), data.output(), &data_hash);
        summaries.push(ctx.finish(&art, &reg_res, |q| gp.predict(q))?);
    }
    if cfg.model.monotonic() {
        let dps = place_inducing(&x, &constraints, cfg.inducing)?;
        let (hp, res) = fit_monotonic_from(&x, &y, &dps, &cfg.ep, &cfg.optimizer, &[reg_hp])?;
        let gp = MonotonicGp::fit(&x, &y, &dps, &hp, &cfg.ep)?;
        let art = ModelArtifact::monotonic(&gp, data.inputs(), data.output(), &data_hash)?;
        summaries.push(ctx.finish(&art, &res, |q| gp.predict(q))?);
    }
    print_json(&json!({ "models": summaries }));
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let art = ModelArtifact::load(&a.model)?;
    let model = art.rebuild()?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&a.query)
        .map_err(|e| csv_err(&a.query, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(&a.query, e))?.clone();
    let names: Vec<String> = headers.iter().map(|h| Column::parse_header(h).name).collect();
    let idx = art
        .inputs
        .iter()
        .map(|c| {
            names.iter().position(|n| *n == c.name).ok_or_else(|| {
                CliError::Config(format!("query is missing input column `{}`", c.name))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let records = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_err(&a.query, e))?;

    let d = idx.len();
    let mut values = Vec::with_capacity(records.len() * d);
    for (r, rec) in records.iter().enumerate() {
        for (&i, col) in idx.iter().zip(&art.inputs) {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                CliError::Config(format!("row {}, column `{}`: cannot parse `{raw}` as a number", r + 1, col.name))
            })?;
            if !v.is_finite() {
                return Err(CliError::Config(format!("row {}, column `{}`: value is not finite", r + 1, col.name)));
            }
            values.push(v);
        }
    }
    let n = records.len();
    let pred = if n == 0 {
        PredictionSet {
            mean: Vec::new(),
            variance: Vec::new(),
            clamped: 0,
        }
    } else {
        model.predict(&DMatrix::from_row_slice(n, d, &values), a.variance.into())?
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = headers.clone();
    header.push_field("mean");
    header.push_field("std");
    w.write_record(&header).map_err(|e| csv_err(&a.out, e))?;
    for ((rec, m), s) in records.iter().zip(&pred.mean).zip(pred.std()) {
        let mut row = rec.clone();
        row.push_field(&m.to_string());
        row.push_field(&s.to_string());
        w.write_record(&row).map_err(|e| csv_err(&a.out, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(&a.out, &bytes)?;
    print_json(&json!({
        "model": art.kind,
        "rows": n,
        "out": a.out.display().to_string(),
        "clamped": pred.clamped,
    }));
    Ok(())
}

fn load_bench_config(path: &Path) -> Result<(BenchConfig, bool)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let has_seed = value.get("seed").is_some();
    let mut cfg: BenchConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(src) = cfg.csv.as_mut() {
        if src.path.is_relative() {
            src.path = config_dir(path).join(&src.path);
        }
    }
    Ok((cfg, has_seed))
}

fn csv_source_from_flags(a: &BenchmarkArgs, path: &Path) -> Result<CsvSource> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| Column::parse_header(h).name)
        .collect();
    let split = a.split.clone();
    let output = match &a.output {
        Some(o) => o.clone(),
        None => names
            .iter()
            .rev()
            .find(|n| Some(*n) != split.as_ref())
            .cloned()
            .ok_or_else(|| CliError::Config(format!("{}: no columns", path.display())))?,
    };
    let inputs = if a.inputs.is_empty() {
        names
            .iter()
            .filter(|n| **n != output && Some(*n) != split.as_ref())
            .cloned()
            .collect()
    } else {
        a.inputs.clone()
    };
    Ok(CsvSource {
        path: path.to_path_buf(),
        schema: CsvSchema {
            inputs,
            output,
            aux: Vec::new(),
            split,
        },
        test_where: a.test_where.clone(),
        monotone: a.monotone.clone(),
    })
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Wins count seeds where the monotonic RMSE is no worse.
fn wins(rows: &[SeedRow]) -> usize {
    rows.iter().filter(|r| r.monotonic_rmse <= r.regular_rmse).count()
}

fn fmt_pairs(pairs: &[(Option<f64>, Option<f64>)]) -> String {
    let f = |v: &Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    pairs
        .iter()
        .map(|(r, m)| format!("{}/{}", f(r), f(m)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn checks(exp: Experiment, report: &BenchmarkReport, sweep: Option<&[SeedRow]>) -> Vec<Check> {
    let (reg, mono) = (&report.regular, &report.monotonic);
    match exp {
        Experiment::Fatigue => {
            let ratio = mono.rmse / reg.rmse;
            let per_restart: Vec<_> = report
                .restarts
                .iter()
                .map(|r| (r.regular_grid_mean_std, r.monotonic_grid_mean_std))
                .collect();
            let reduced = !per_restart.is_empty()
                && per_restart.iter().all(|p| matches!(p, (Some(r), Some(m)) if m < r));
            vec![
                check(
                    "ordering",
                    mono.rmse < reg.rmse,
                    format!("monotonic rmse {:.4} vs regular {:.4}", mono.rmse, reg.rmse),
                ),
                check("ratio", ratio <= 0.5, format!("rmse ratio {ratio:.3}, limit 0.5")),
                check(
                    "monotonicity",
                    mono.violations_inside == 0,
                    format!(
                        "{} violations inside the training range, {} outside",
                        mono.violations_inside, mono.violations_outside
                    ),
                ),
                check(
                    "variance_reduction",
                    reduced,
                    format!("per-restart grid mean std, regular/monotonic: {}", fmt_pairs(&per_restart)),
                ),
            ]
        }
        Experiment::Logistic => {
            let rows = sweep.unwrap_or(&[]);
            let w = wins(rows);
            vec![check(
                "win_rate",
                !rows.is_empty() && w * 10 >= 7 * rows.len(),
                format!("monotonic no worse in {w} of {} seeds, need 70%", rows.len()),
            )]
        }
        Experiment::Hallpetch => {
            let total = mono.violations_inside + mono.violations_outside;
            vec![check("monotonicity", total == 0, format!("{total} violations on the grid"))]
        }
        Experiment::Csv => {
            let r2 = |m: &ModelReport| m.r_squared.unwrap_or(f64::NAN);
            let (a, b) = (r2(reg), r2(mono));
            vec![
                check(
                    "monotonicity",
                    mono.violations_inside == 0,
                    format!("{} violations inside the training box", mono.violations_inside),
                ),
                check(
                    "accuracy",
                    a > 0.95 && b > 0.95,
                    format!("R² regular {a:.4}, monotonic {b:.4}"),
                ),
                check("gap", (a - b).abs() < 0.05, format!("R² gap {:.4}", (a - b).abs())),
            ]
        }
    }
}

fn model_summary(m: &ModelReport) -> serde_json::Value {
    json!({
        "hyperparameters": m.hyperparameters,
        "log_marginal": m.log_marginal,
        "rmse": m.rmse,
        "r_squared": m.r_squared,
        "grid_mean_std": m.grid_mean_std,
        "violations_inside": m.violations_inside,
        "violations_outside": m.violations_outside,
        "ep_sweeps": m.ep_sweeps,
    })
}

pub fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let exp = a.experiment;
    let (mut cfg, config_seed) = match &a.config {
        Some(p) => load_bench_config(p)?,
        None => (BenchConfig::default(), false),
    };
    let seed = match a.seed {
        Some(s) => s,
        None if config_seed => cfg.seed,
        None => env_seed()?,
    };
    cfg.seed = seed;
    cfg.optimizer.seed = seed;
    if let Some(nu) = a.nu {
        cfg.ep.nu = nu;
    }
    match (&a.data, exp) {
        (Some(path), Experiment::Csv) => cfg.csv = Some(csv_source_from_flags(&a, path)?),
        (Some(_), _) => {
            return Err(CliError::Config("--data is only valid for the csv experiment".into()));
        }
        (None, Experiment::Csv) => {
            let src = cfg
                .csv
                .as_mut()
                .ok_or_else(|| CliError::Config("csv experiment needs --data or a csv config section".into()))?;
            if !a.monotone.is_empty() {
                src.monotone = a.monotone.clone();
            }
            if a.test_where.is_some() {
                src.test_where = a.test_where.clone();
            }
        }
        (None, _) => {}
    }
    let cfg = cfg.with_exec(exec_mode(a.sequential));

    let (report, grid) = run_benchmark(exp, &cfg)?;
    let name = exp.name();
    write_json(&a.out_dir.join(format!("{name}.report.json")), &report)?;
    write_atomic(&a.out_dir.join(format!("{name}.grid.csv")), &grid.to_csv_bytes())?;

    let n_seeds = a.seeds.or((a.check && exp == Experiment::Logistic).then_some(20));
    let sweep = match n_seeds {
        Some(0) => return Err(CliError::Config("--seeds must be at least 1".into())),
        Some(k) => {
            let seeds: Vec<u64> = (0..k as u64).map(|i| seed + i).collect();
            let rows = seed_sweep(exp, &cfg, &seeds)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Config(e.to_string());
            w.write_record(["seed", "regular_rmse", "monotonic_rmse", "monotonic_no_worse"])
                .map_err(io)?;
            for r in &rows {
                w.write_record([
                    r.seed.to_string(),
                    r.regular_rmse.to_string(),
                    r.monotonic_rmse.to_string(),
                    (r.monotonic_rmse <= r.regular_rmse).to_string(),
                ])
                .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            write_atomic(&a.out_dir.join(format!("{name}.seeds.csv")), &bytes)?;
            Some(rows)
        }
        None => None,
    };

    let results = if a.check { checks(exp, &report, sweep.as_deref()) } else { Vec::new() };
    for c in &results {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    print_json(&json!({
        "experiment": name,
        "data_hash": report.data_hash,
        "seed": seed,
        "n_train": report.n_train,
        "n_test": report.n_test,
        "n_inducing": report.n_inducing,
        "regular": model_summary(&report.regular),
        "monotonic": model_summary(&report.monotonic),
        "sweep": sweep.as_ref().map(|rows| json!({"seeds": rows.len(), "monotonic_no_worse": wins(rows)})),
        "checks": results,
    }));
    let failed = results.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Check { failed });
    }
    Ok(())
}
