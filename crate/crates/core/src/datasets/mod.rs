//! In-memory datasets, the built-in generators and CSV ingestion.

mod csv_io;
mod fatigue;
mod synthetic;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use csv_io::{load_csv, parse_csv, save_csv, to_csv_bytes, CsvSchema, SplitRule};
pub use fatigue::{fatigue_s355n, fatigue_s355n_with_base, FATIGUE_TEST, FATIGUE_TRAIN};
pub use synthetic::{
    gen_hallpetch, gen_logistic, gen_logistic_with, hallpetch_mean, hallpetch_noise_std, logistic, LogisticSampling,
    NoiseKind, NoiseSpec, HALLPETCH_RANGE, LOGISTIC_RANGE,
};

/// Row numbers count data rows from 1, excluding the header.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("row {row}: split tag `{value}` is neither `train` nor `test`")]
    BadSplit { row: usize, value: String },
    #[error("dataset has no rows")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Empty when unitless or unknown.
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            unit: unit.into(),
        }
    }

    /// `name` or `name[unit]`.
    pub fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{}]", self.name, self.unit)
        }
    }

    pub fn parse_header(h: &str) -> Self {
        let h = h.trim();
        if let Some(open) = h.find('[') {
            if h.ends_with(']') {
                return Column::new(&h[..open], &h[open + 1..h.len() - 1]);
            }
        }
        Column::new(h, "")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Column>,
    x: DMatrix<f64>,
    output: Column,
    y: Vec<f64>,
    aux: Vec<(Column, Vec<f64>)>,
    splits: Vec<Split>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        inputs: Vec<Column>,
        x: DMatrix<f64>,
        output: Column,
        y: Vec<f64>,
        splits: Vec<Split>,
    ) -> Result<Self, DatasetError> {
        let n = y.len();
        if x.nrows() != n || splits.len() != n {
            return Err(DatasetError::Shape(format!(
                "{} input rows, {n} outputs, {} split tags",
                x.nrows(),
                splits.len()
            )));
        }
        if x.ncols() != inputs.len() {
            return Err(DatasetError::Shape(format!(
                "{} input columns but {} names",
                x.ncols(),
                inputs.len()
            )));
        }
        for r in 0..n {
            for (c, col) in inputs.iter().enumerate() {
                if !x[(r, c)].is_finite() {
                    return Err(DatasetError::NonFinite {
                        row: r,
                        column: col.name.clone(),
                    });
                }
            }
            if !y[r].is_finite() {
                return Err(DatasetError::NonFinite {
                    row: r,
                    column: output.name.clone(),
                });
            }
        }
        Ok(Dataset {
            inputs,
            x,
            output,
            y,
            aux: Vec::new(),
            splits,
            provenance: String::new(),
        })
    }

    pub fn with_aux(mut self, column: Column, values: Vec<f64>) -> Result<Self, DatasetError> {
        if values.len() != self.len() {
            return Err(DatasetError::Shape(format!(
                "auxiliary column has {} rows, dataset has {}",
                values.len(),
                self.len()
            )));
        }
        self.aux.push((column, values));
        Ok(self)
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = note.into();
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[Column] {
        &self.inputs
    }

    pub fn output(&self) -> &Column {
        &self.output
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn aux(&self) -> &[(Column, Vec<f64>)] {
        &self.aux
    }

    pub fn aux_column(&self, name: &str) -> Option<&[f64]> {
        self.aux
            .iter()
            .find(|(c, _)| c.name == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn set_splits(&mut self, splits: Vec<Split>) -> Result<(), DatasetError> {
        if splits.len() != self.len() {
            return Err(DatasetError::Shape("split length mismatch".into()));
        }
        self.splits = splits;
        Ok(())
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|c| c.name == name)
    }

    pub fn count(&self, split: Split) -> usize {
        self.splits.iter().filter(|s| **s == split).count()
    }

    pub fn rows(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Inputs and outputs of one split.
    pub fn part(&self, split: Split) -> (DMatrix<f64>, DVector<f64>) {
        let rows = self.rows(split);
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        (x, y)
    }

    pub fn train(&self) -> (DMatrix<f64>, DVector<f64>) {
        self.part(Split::Train)
    }

    pub fn test(&self) -> (DMatrix<f64>, DVector<f64>) {
        self.part(Split::Test)
    }

    /// SHA-256 over the canonical CSV serialization.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(to_csv_bytes(self)))
    }
}
