//! Experiment configuration for `fit`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use monogp::datasets::{
    self, fatigue_s355n_with_base, gen_hallpetch, gen_logistic_with, CsvSchema, Dataset, LogisticSampling,
    SplitRule,
};
use monogp::ep_monotonic::{EpOptions, InducingPolicy};
use monogp::hyperopt::OptimizerConfig;
use monogp::kernel::Direction;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "MONOGP_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Logistic,
    Hallpetch,
    Fatigue,
}

fn one() -> f64 {
    1.0
}

fn ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Builtin {
        name: Builtin,
        /// Generator sample count; ignored for the fatigue table.
        #[serde(default)]
        n: Option<usize>,
        #[serde(default = "one")]
        noise_scale: f64,
        #[serde(default)]
        sampling: LogisticSampling,
        /// Logarithm base for fatigue life.
        #[serde(default = "ten")]
        log_base: f64,
    },
    Csv {
        path: PathBuf,
        schema: CsvSchema,
        /// Rows matching this rule become test rows, e.g. `kT>0.75,t>=1000`.
        #[serde(default)]
        test_where: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Regular,
    Monotonic,
    #[default]
    Both,
}

impl ModelChoice {
    pub fn regular(self) -> bool {
        self != ModelChoice::Monotonic
    }

    pub fn monotonic(self) -> bool {
        self != ModelChoice::Regular
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelChoice,
    /// Input column name to `+1` (increasing), `-1` (decreasing) or `0`.
    #[serde(default)]
    pub directions: BTreeMap<String, i8>,
    #[serde(default)]
    pub inducing: InducingPolicy,
    /// EP settings, including ν.
    #[serde(default = "EpOptions::centered")]
    pub ep: EpOptions,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if let Some((col, v)) = self.directions.iter().find(|(_, v)| !(-1..=1).contains(*v)) {
            return Err(CliError::Config(format!(
                "direction for `{col}` must be -1, 0 or 1, got {v}"
            )));
        }
        if self.model.monotonic() && self.directions.values().all(|v| *v == 0) {
            return Err(CliError::Config(
                "monotonic model needs at least one nonzero direction".into(),
            ));
        }
        self.optimizer.validate()?;
        if let DatasetSource::Csv { schema, test_where, .. } = &self.dataset {
            if schema.inputs.is_empty() || schema.output.is_empty() {
                return Err(CliError::Config("csv schema needs inputs and an output".into()));
            }
            if let Some(rule) = test_where {
                SplitRule::parse(rule)?;
            }
        }
        Ok(())
    }

    /// Seed precedence: explicit flag, then config, then `MONOGP_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        match flag.or(self.seed) {
            Some(s) => Ok(s),
            None => env_seed(),
        }
    }

    pub fn load_data(&self, seed: u64, base_dir: &Path) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Builtin {
                name,
                n,
                noise_scale,
                sampling,
                log_base,
            } => Ok(match name {
                Builtin::Logistic => gen_logistic_with(check_n(n.unwrap_or(10))?, seed, 0.1, *sampling),
                Builtin::Hallpetch => gen_hallpetch(check_n(n.unwrap_or(20))?, seed, *noise_scale),
                Builtin::Fatigue => {
                    if !(*log_base > 1.0) {
                        return Err(CliError::Config("log_base must exceed 1".into()));
                    }
                    fatigue_s355n_with_base(*log_base)
                }
            }),
            DatasetSource::Csv {
                path,
                schema,
                test_where,
            } => {
                let path = if path.is_relative() { base_dir.join(path) } else { path.clone() };
                let mut data = datasets::load_csv(&path, schema)?;
                if let Some(rule) = test_where {
                    SplitRule::parse(rule)?.apply(&mut data)?;
                }
                Ok(data)
            }
        }
    }

    /// Resolves named directions against the dataset's input columns.
    pub fn constraints(&self, data: &Dataset) -> Result<Vec<(usize, Direction)>> {
        let mut out = Vec::new();
        for (col, &v) in &self.directions {
            let i = data
                .input_index(col)
                .ok_or_else(|| CliError::Config(format!("direction given for unknown input column `{col}`")))?;
            match v {
                1 => out.push((i, Direction::Increasing)),
                -1 => out.push((i, Direction::Decreasing)),
                _ => {}
            }
        }
        out.sort_by_key(|c| c.0);
        Ok(out)
    }
}

fn check_n(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(CliError::Config(format!("n must be at least 2, got {n}")));
    }
    Ok(n)
}

pub fn env_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "dataset": {"source": "csv", "path": "g.csv",
                            "schema": {"inputs": ["t", "kT"], "output": "g"},
                            "test_where": "kT>0.75"},
                "model": "monotonic",
                "directions": {"t": 1, "kT": 0},
                "ep": {"nu": 0.3333333333333333, "center": true},
                "optimizer": {"restarts": 3, "seed": 7},
                "seed": 12345678901234
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn round_trips_losslessly() {
        let cfg = sample();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.ep.nu.to_bits(), (1.0f64 / 3.0).to_bits());
        let builtin = ExperimentConfig {
            dataset: DatasetSource::Builtin {
                name: Builtin::Hallpetch,
                n: Some(20),
                noise_scale: 0.1 + 0.2,
                sampling: LogisticSampling::Uniform,
                log_base: std::f64::consts::E,
            },
            ..cfg
        };
        let text = serde_json::to_string_pretty(&builtin).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), builtin);
    }

    #[test]
    fn monotonic_needs_a_direction() {
        let mut cfg = sample();
        cfg.directions = BTreeMap::from([("t".into(), 0), ("kT".into(), 0)]);
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        cfg.model = ModelChoice::Regular;
        assert!(cfg.validate().is_ok());
        cfg.directions.insert("t".into(), 2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"dataset": {"source": "builtin", "name": "fatigue"}, "modle": "both"}"#,
        );
        assert!(err.is_err());
    }
}
