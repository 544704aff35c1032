use nalgebra::DMatrix;

use super::{Column, Dataset, Split};

/// S355N steel, stress amplitude (MPa) and cycles to failure; the high-stress half.
pub const FATIGUE_TRAIN: [(f64, f64); 12] = [
    (674.0, 2908.0),
    (558.0, 8115.0),
    (556.0, 10035.0),
    (507.0, 17012.0),
    (483.0, 19955.0),
    (505.0, 20595.0),
    (498.0, 23780.0),
    (490.0, 25913.0),
    (484.0, 28045.0),
    (474.0, 51430.0),
    (469.0, 52000.0),
    (475.0, 66200.0),
];

pub const FATIGUE_TEST: [(f64, f64); 13] = [
    (427.0, 77730.0),
    (400.0, 113900.0),
    (411.0, 117275.0),
    (403.0, 144264.0),
    (390.0, 192920.0),
    (391.0, 198992.0),
    (379.0, 243816.0),
    (366.0, 376815.0),
    (369.0, 396987.0),
    (345.0, 406800.0),
    (342.0, 1252208.0),
    (335.0, 1444998.0),
    (335.0, 1528487.0),
];

/// Fatigue table with `log10 N` as output.
pub fn fatigue_s355n() -> Dataset {
    fatigue_s355n_with_base(10.0)
}

/// Output is `log_base N`; raw life is kept as the auxiliary column `N_exp`.
pub fn fatigue_s355n_with_base(base: f64) -> Dataset {
    assert!(base > 1.0, "log base must exceed 1");
    let rows: Vec<(f64, f64, Split)> = FATIGUE_TRAIN
        .iter()
        .map(|&(s, n)| (s, n, Split::Train))
        .chain(FATIGUE_TEST.iter().map(|&(s, n)| (s, n, Split::Test)))
        .collect();
    let sigma: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let life: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let y = life.iter().map(|n| n.log(base)).collect();
    let name = if base == 10.0 {
        "log10_N_exp".to_string()
    } else {
        format!("log{base}_N_exp")
    };
    Dataset::new(
        vec![Column::new("sigma_a", "MPa")],
        DMatrix::from_column_slice(rows.len(), 1, &sigma),
        Column::new(name, ""),
        y,
        rows.iter().map(|r| r.2).collect(),
    )
    .and_then(|d| d.with_aux(Column::new("N_exp", "cycles"), life))
    .expect("table is finite")
    .with_provenance("S355N fatigue table")
}
