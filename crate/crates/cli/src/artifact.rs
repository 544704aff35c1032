//! Versioned JSON model files.

use std::path::Path;

use monogp::datasets::Column;
use monogp::ep_monotonic::{EpOptions, MonotonicGp};
use monogp::gp_regression::{FittedGp, GpOptions, PredictionSet, VarianceKind};
use monogp::kernel::{DerivativePointSet, Direction, Hyperparameters};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA: &str = "monogp.model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Regular,
    Monotonic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Regular => "regular",
            ModelKind::Monotonic => "monotonic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicPart {
    pub ep: EpOptions,
    /// Row-major M×D.
    pub locations: Vec<f64>,
    pub dims: Vec<usize>,
    pub directions: Vec<Direction>,
    /// `[precision, shift]` per derivative point.
    pub sites: Vec<[f64; 2]>,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub schema: String,
    pub version: u32,
    pub kind: ModelKind,
    pub inputs: Vec<Column>,
    pub output: Column,
    /// Checksum of the full dataset the model was trained from.
    pub data_hash: String,
    pub hyperparameters: Hyperparameters,
    pub center: bool,
    /// Row-major N×D.
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
    pub log_marginal: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonic: Option<MonotonicPart>,
}

pub enum Model {
    Regular(FittedGp),
    Monotonic(MonotonicGp),
}

impl Model {
    pub fn predict(&self, xq: &DMatrix<f64>, var: VarianceKind) -> Result<PredictionSet> {
        Ok(match self {
            Model::Regular(m) => m.predict_with(xq, var)?,
            Model::Monotonic(m) => m.predict_with(xq, var)?,
        })
    }
}

fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    x.transpose().as_slice().to_vec()
}

impl ModelArtifact {
    fn base(kind: ModelKind, gp: &FittedGp, center: bool, inputs: &[Column], output: &Column, data_hash: &str) -> Self {
        ModelArtifact {
            schema: SCHEMA.into(),
            version: VERSION,
            kind,
            inputs: inputs.to_vec(),
            output: output.clone(),
            data_hash: data_hash.into(),
            hyperparameters: gp.hyperparameters().clone(),
            center,
            train_x: row_major(gp.x_train()),
            train_y: gp.y_train().iter().copied().collect(),
            log_marginal: gp.log_marginal(),
            monotonic: None,
        }
    }

    pub fn regular(gp: &FittedGp, center: bool, inputs: &[Column], output: &Column, data_hash: &str) -> Self {
        Self::base(ModelKind::Regular, gp, center, inputs, output, data_hash)
    }

    pub fn monotonic(gp: &MonotonicGp, inputs: &[Column], output: &Column, data_hash: &str) -> Result<Self> {
        let dps = gp.derivative_points();
        let mut art = Self::base(ModelKind::Monotonic, gp.base(), gp.options().center, inputs, output, data_hash);
        art.log_marginal = gp.log_marginal()?;
        art.monotonic = Some(MonotonicPart {
            ep: *gp.options(),
            locations: row_major(&dps.locations()),
            dims: dps.dims().to_vec(),
            directions: dps.directions().to_vec(),
            sites: gp.state().sites().iter().map(|s| [s.precision, s.shift]).collect(),
            sweeps: gp.state().sweeps(),
        });
        Ok(art)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let art: ModelArtifact = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a model file: {e}", path.display())))?;
        if art.schema != SCHEMA || art.version != VERSION {
            return Err(CliError::Config(format!(
                "{}: expected schema {SCHEMA} version {VERSION}, found {} version {}",
                path.display(),
                art.schema,
                art.version
            )));
        }
        Ok(art)
    }

    fn train(&self) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let d = self.inputs.len();
        let n = self.train_y.len();
        if d == 0 || self.train_x.len() != n * d {
            return Err(CliError::Config(format!(
                "model holds {} input values for {n} rows and {d} inputs",
                self.train_x.len()
            )));
        }
        Ok((
            DMatrix::from_row_slice(n, d, &self.train_x),
            DVector::from_column_slice(&self.train_y),
        ))
    }

    /// Reconstructs the fitted model without re-optimizing or rerunning EP.
    pub fn rebuild(&self) -> Result<Model> {
        let (x, y) = self.train()?;
        match (self.kind, &self.monotonic) {
            (ModelKind::Regular, None) => {
                let opts = GpOptions {
                    center: self.center,
                    ..Default::default()
                };
                Ok(Model::Regular(FittedGp::fit_with(&x, &y, &self.hyperparameters, opts)?))
            }
            (ModelKind::Monotonic, Some(part)) => {
                let d = self.inputs.len();
                let m = part.dims.len();
                if part.locations.len() != m * d {
                    return Err(CliError::Config(format!(
                        "model holds {} location values for {m} derivative points",
                        part.locations.len()
                    )));
                }
                let dps = DerivativePointSet::new(
                    &DMatrix::from_row_slice(m, d, &part.locations),
                    part.dims.clone(),
                    part.directions.clone(),
                )?;
                let sites: Vec<(f64, f64)> = part.sites.iter().map(|s| (s[0], s[1])).collect();
                let gp = MonotonicGp::from_sites(&x, &y, &dps, &self.hyperparameters, &part.ep, &sites)?;
                Ok(Model::Monotonic(gp))
            }
            (kind, _) => Err(CliError::Config(format!(
                "{} model file has inconsistent monotonic section",
                kind.name()
            ))),
        }
    }
}
