mod artifact;
mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use monogp::bench::{Experiment, MonotoneFlag};
use monogp::datasets::LogisticSampling;
use monogp::gp_regression::VarianceKind;

/// Gaussian process regression with and without monotonicity constraints.
#[derive(Debug, Parser)]
#[command(name = "monogp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset to CSV.
    Generate(GenerateArgs),
    /// Fit models described by an experiment config.
    Fit(FitArgs),
    /// Predict with a saved model at the rows of a CSV file.
    Predict(PredictArgs),
    /// Run a regular-vs-monotonic benchmark.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeneratorName {
    Logistic,
    Hallpetch,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sampling {
    Equispaced,
    Uniform,
}

impl From<Sampling> for LogisticSampling {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::Equispaced => LogisticSampling::Equispaced,
            Sampling::Uniform => LogisticSampling::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variance {
    Latent,
    Observed,
}

impl From<Variance> for VarianceKind {
    fn from(v: Variance) -> Self {
        match v {
            Variance::Latent => VarianceKind::Latent,
            Variance::Observed => VarianceKind::Observed,
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    name: GeneratorName,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Number of samples [default: 10 for logistic, 20 for hallpetch]
    #[arg(long)]
    n: Option<usize>,
    /// Random seed [default: $MONOGP_SEED, then 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier on the Hall-Petch noise level.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Logistic input placement.
    #[arg(long, value_enum, default_value_t = Sampling::Equispaced)]
    sampling: Sampling,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the config seed and $MONOGP_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the probit steepness ν.
    #[arg(long)]
    nu: Option<f64>,
    /// Run without data parallelism.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// CSV with one column per model input; extra columns are copied through.
    #[arg(long)]
    query: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Whether `std` includes observation noise.
    #[arg(long, value_enum, default_value_t = Variance::Latent)]
    variance: Variance,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// logistic, hallpetch, fatigue or csv.
    experiment: Experiment,
    /// Benchmark config JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the report, grid and seed-sweep files.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Data and optimizer seed [default: config, then $MONOGP_SEED, then 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Also run a sweep over this many consecutive seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Overrides the probit steepness ν.
    #[arg(long)]
    nu: Option<f64>,
    /// Exit with code 4 if the experiment's acceptance checks fail.
    #[arg(long)]
    check: bool,
    /// Run without data parallelism.
    #[arg(long)]
    sequential: bool,
    /// CSV data file (csv experiment).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Monotone input as `column:+` or `column:-`; repeatable.
    #[arg(long)]
    monotone: Vec<MonotoneFlag>,
    /// Rows matching every clause are test rows, e.g. `kT>0.75,t>=1000`.
    #[arg(long)]
    test_where: Option<String>,
    /// Comma-separated input columns [default: all but output and split]
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<String>,
    /// Output column [default: last column]
    #[arg(long)]
    output: Option<String>,
    /// Column holding train/test tags.
    #[arg(long)]
    split: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Benchmark(a) => commands::benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
