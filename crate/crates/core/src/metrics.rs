//! Accuracy and calibration metrics.

use crate::error::{GpError, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(GpError::Shape(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(GpError::EmptyData);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// `1 - SS_res / SS_tot`. Rejects constant truth.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(GpError::InvalidInput("truth has zero variance".into()));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fraction of `truth` inside `mean ± z·std`.
pub fn coverage(mean: &[f64], std: &[f64], truth: &[f64], z: f64) -> Result<f64> {
    check_lengths(mean.len(), truth.len())?;
    check_lengths(std.len(), truth.len())?;
    if let Some(s) = std.iter().find(|s| !(**s >= 0.0)) {
        return Err(GpError::InvalidInput(format!("negative std {s}")));
    }
    let inside = mean
        .iter()
        .zip(std)
        .zip(truth)
        .filter(|((m, s), t)| (*t - *m).abs() <= z * *s)
        .count();
    Ok(inside as f64 / truth.len() as f64)
}

pub const Z90: f64 = 1.645;
pub const Z68: f64 = 1.0;
