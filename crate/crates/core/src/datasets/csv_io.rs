use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Column, Dataset, DatasetError, Split};

/// Which CSV columns play which role. Names exclude the `[unit]` suffix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub inputs: Vec<String>,
    pub output: String,
    pub aux: Vec<String>,
    /// Column holding `train` / `test`. Without it every row is training data
    /// unless a [`SplitRule`] is applied afterwards.
    pub split: Option<String>,
}

/// Marks rows as test when every clause holds, e.g. `kT>0.75,t>=1000`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub clauses: Vec<(String, Cmp, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl SplitRule {
    pub fn parse(s: &str) -> Result<Self, DatasetError> {
        let mut clauses = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (op, cmp) = [(">=", Cmp::Ge), ("<=", Cmp::Le), (">", Cmp::Gt), ("<", Cmp::Lt)]
                .into_iter()
                .find(|(op, _)| part.contains(op))
                .ok_or_else(|| DatasetError::Csv(format!("bad split clause `{part}`")))?;
            let (name, value) = part.split_once(op).unwrap();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| DatasetError::Csv(format!("bad threshold in `{part}`")))?;
            clauses.push((name.trim().to_string(), cmp, value));
        }
        if clauses.is_empty() {
            return Err(DatasetError::Csv("empty split rule".into()));
        }
        Ok(SplitRule { clauses })
    }

    pub fn apply(&self, data: &mut Dataset) -> Result<(), DatasetError> {
        let cols: Vec<(usize, Cmp, f64)> = self
            .clauses
            .iter()
            .map(|(name, cmp, v)| {
                data.input_index(name)
                    .map(|i| (i, *cmp, *v))
                    .ok_or_else(|| DatasetError::MissingColumn(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let splits = (0..data.len())
            .map(|r| {
                let test = cols.iter().all(|&(c, cmp, v)| {
                    let x = data.x()[(r, c)];
                    match cmp {
                        Cmp::Lt => x < v,
                        Cmp::Le => x <= v,
                        Cmp::Gt => x > v,
                        Cmp::Ge => x >= v,
                    }
                });
                if test {
                    Split::Test
                } else {
                    Split::Train
                }
            })
            .collect();
        data.set_splits(splits)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    parse_csv(&bytes, schema).map(|d| d.with_provenance(path.display().to_string()))
}

pub fn parse_csv(bytes: &[u8], schema: &CsvSchema) -> Result<Dataset, DatasetError> {
    if schema.inputs.is_empty() || schema.output.is_empty() {
        return Err(DatasetError::Csv(
            "schema needs at least one input and an output".into(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers: Vec<Column> = rdr
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .iter()
        .map(Column::parse_header)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let in_idx: Vec<usize> = schema.inputs.iter().map(|n| find(n)).collect::<Result<_, _>>()?;
    let out_idx = find(&schema.output)?;
    let aux_idx: Vec<usize> = schema.aux.iter().map(|n| find(n)).collect::<Result<_, _>>()?;
    let split_idx = schema.split.as_deref().map(find).transpose()?;

    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys = Vec::new();
    let mut aux: Vec<Vec<f64>> = vec![Vec::new(); aux_idx.len()];
    let mut splits = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let num = |c: usize| -> Result<f64, DatasetError> {
            let raw = rec.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| DatasetError::NonNumeric {
                row,
                column: headers[c].name.clone(),
                value: raw.to_string(),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DatasetError::NonFinite {
                    row,
                    column: headers[c].name.clone(),
                })
            }
        };
        xs.push(in_idx.iter().map(|&c| num(c)).collect::<Result<_, _>>()?);
        ys.push(num(out_idx)?);
        for (k, &c) in aux_idx.iter().enumerate() {
            aux[k].push(num(c)?);
        }
        splits.push(match split_idx {
            None => Split::Train,
            Some(c) => match rec.get(c).unwrap_or("").to_ascii_lowercase().as_str() {
                "train" => Split::Train,
                "test" => Split::Test,
                other => {
                    return Err(DatasetError::BadSplit {
                        row,
                        value: other.to_string(),
                    })
                }
            },
        });
    }
    if ys.is_empty() {
        return Err(DatasetError::Empty);
    }
    let n = ys.len();
    let x = DMatrix::from_fn(n, in_idx.len(), |r, c| xs[r][c]);
    let mut data = Dataset::new(
        in_idx.iter().map(|&c| headers[c].clone()).collect(),
        x,
        headers[out_idx].clone(),
        ys,
        splits,
    )?;
    for (k, &c) in aux_idx.iter().enumerate() {
        data = data.with_aux(headers[c].clone(), std::mem::take(&mut aux[k]))?;
    }
    Ok(data)
}

/// Columns in order: inputs, output, auxiliary, `split`.
pub fn to_csv_bytes(data: &Dataset) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = data.inputs().iter().map(Column::header).collect();
    header.push(data.output().header());
    header.extend(data.aux().iter().map(|(c, _)| c.header()));
    header.push("split".into());
    w.write_record(&header).expect("in-memory write");
    for r in 0..data.len() {
        let mut rec: Vec<String> = (0..data.dim()).map(|c| data.x()[(r, c)].to_string()).collect();
        rec.push(data.y()[r].to_string());
        rec.extend(data.aux().iter().map(|(_, v)| v[r].to_string()));
        rec.push(data.splits()[r].as_str().into());
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&to_csv_bytes(data)).map_err(|e| io_err(path, e))
}

impl CsvSchema {
    /// Schema matching what [`save_csv`] writes for `data`.
    pub fn of(data: &Dataset) -> Self {
        CsvSchema {
            inputs: data.inputs().iter().map(|c| c.name.clone()).collect(),
            output: data.output().name.clone(),
            aux: data.aux().iter().map(|(c, _)| c.name.clone()).collect(),
            split: Some("split".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{fatigue_s355n, gen_logistic};

    #[test]
    fn round_trip_is_lossless() {
        for d in [gen_logistic(10, 3), fatigue_s355n()] {
            let bytes = to_csv_bytes(&d);
            let back = parse_csv(&bytes, &CsvSchema::of(&d)).unwrap();
            assert_eq!(back.x(), d.x());
            assert_eq!(back.y(), d.y());
            assert_eq!(back.splits(), d.splits());
            assert_eq!(back.aux(), d.aux());
            assert_eq!(to_csv_bytes(&back), bytes);
        }
    }

    #[test]
    fn schema_errors_name_the_cell() {
        let schema = CsvSchema {
            inputs: vec!["a".into()],
            output: "b".into(),
            ..Default::default()
        };
        let err = parse_csv(b"a,b\n1,2\n3,x\n", &schema).unwrap_err();
        assert_eq!(
            err,
            DatasetError::NonNumeric {
                row: 2,
                column: "b".into(),
                value: "x".into()
            }
        );
        assert_eq!(parse_csv(b"a,b\n", &schema).unwrap_err(), DatasetError::Empty);
        assert_eq!(
            parse_csv(b"a,c\n1,2\n", &schema).unwrap_err(),
            DatasetError::MissingColumn("b".into())
        );
        assert!(matches!(
            parse_csv(b"a,b\n1,inf\n", &schema).unwrap_err(),
            DatasetError::NonFinite { row: 1, .. }
        ));
    }

    #[test]
    fn split_rule() {
        let schema = CsvSchema {
            inputs: vec!["kT".into(), "t".into()],
            output: "g".into(),
            ..Default::default()
        };
        let mut d = parse_csv(b"kT,t,g\n0.85,1000,1\n0.85,900,1\n0.5,1200,1\n", &schema).unwrap();
        SplitRule::parse("kT>0.75, t>=1000").unwrap().apply(&mut d).unwrap();
        assert_eq!(d.splits(), &[Split::Test, Split::Train, Split::Train]);
        assert!(SplitRule::parse("kT~1").is_err());
    }
}
