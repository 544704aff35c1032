//! Cholesky factorization with a diagonal jitter ladder.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{GpError, Result};

/// Relative jitter levels tried in order. Each level multiplies a per-row
/// prior-variance scale before being added to the diagonal.
pub const JITTER_LEVELS: [f64; 2] = [1e-8, 1e-6];

/// A Cholesky factor together with the jitter that made it succeed.
#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    chol: Cholesky<f64, Dyn>,
    /// Relative level from [`JITTER_LEVELS`].
    pub level: f64,
    /// Absolute amount added to each diagonal entry.
    pub added: Vec<f64>,
}

impl JitteredCholesky {
    /// Factorizes `a + level * diag(scale)` for the first level that works.
    pub fn factor(a: &DMatrix<f64>, scale: &[f64]) -> Result<Self> {
        assert_eq!(a.nrows(), scale.len());
        for &level in JITTER_LEVELS.iter() {
            let mut m = a.clone();
            let added: Vec<f64> = scale.iter().map(|s| level * s).collect();
            for (i, add) in added.iter().enumerate() {
                m[(i, i)] += add;
            }
            if let Some(chol) = m.cholesky() {
                if chol.l_dirty().diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
                    return Ok(JitteredCholesky { chol, level, added });
                }
            }
        }
        Err(GpError::Conditioning {
            jitters: JITTER_LEVELS.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.added.len()
    }

    /// Lower-triangular factor `L` (upper part may hold garbage).
    pub fn l(&self) -> &DMatrix<f64> {
        self.chol.l_dirty()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `L⁻¹ b`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Explicit inverse of the factorized (jittered) matrix.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// Plain Cholesky for matrices that are positive definite by construction
/// (e.g. `I + S^½ K S^½`).
pub fn cholesky_spd(a: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    a.cholesky().ok_or(GpError::Conditioning { jitters: vec![0.0] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retries_on_singular_matrix() {
        // Rank one: fails without jitter, succeeds at the first level.
        let a = DMatrix::from_element(3, 3, 1.0);
        let f = JitteredCholesky::factor(&a, &[1.0; 3]).unwrap();
        assert_eq!(f.level, 1e-8);
        assert!(f.log_det().is_finite());
    }

    #[test]
    fn indefinite_matrix_reports_levels() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match JitteredCholesky::factor(&a, &[1.0; 2]) {
            Err(GpError::Conditioning { jitters }) => assert_eq!(jitters, vec![1e-8, 1e-6]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
