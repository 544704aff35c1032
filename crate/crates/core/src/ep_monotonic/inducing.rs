//! Deterministic placement of virtual derivative points.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::kernel::{DerivativePointSet, Direction};

pub const DEFAULT_CAP: usize = 100;
const SUBSAMPLE_SEED: u64 = 0x5eed;

/// Grid resolution per axis and the overall cap on M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InducingPolicy {
    /// `None` picks 10 for one input dimension and 5 otherwise.
    pub m_per_dim: Option<usize>,
    pub cap: usize,
}

impl Default for InducingPolicy {
    fn default() -> Self {
        InducingPolicy {
            m_per_dim: None,
            cap: DEFAULT_CAP,
        }
    }
}

pub fn default_m_per_dim(dim: usize) -> usize {
    if dim <= 1 {
        10
    } else {
        5
    }
}

fn axis(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..m)
        .map(|k| {
            if k == m - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (m - 1) as f64
            }
        })
        .collect()
}

/// Places a full tensor grid over the training bounding box for every
/// constrained dimension, then subsamples to `policy.cap` if needed.
pub fn place_inducing(
    x: &DMatrix<f64>,
    constraints: &[(usize, Direction)],
    policy: InducingPolicy,
) -> Result<DerivativePointSet> {
    let d = x.ncols();
    if x.nrows() == 0 {
        return Err(GpError::EmptyData);
    }
    let m = policy.m_per_dim.unwrap_or_else(|| default_m_per_dim(d));
    if m == 0 {
        return Err(GpError::InvalidInput("m_per_dim must be at least 1".into()));
    }
    if policy.cap == 0 {
        return Err(GpError::InvalidInput("inducing cap must be at least 1".into()));
    }
    if let Some((g, _)) = constraints.iter().find(|(g, _)| *g >= d) {
        return Err(GpError::Shape(format!("constrained dimension {g} out of range for D={d}")));
    }
    let mut axes = Vec::with_capacity(d);
    for j in 0..d {
        let col = x.column(j);
        let (lo, hi) = (col.min(), col.max());
        if !(hi > lo) {
            return Err(GpError::DegenerateBox { dim: j });
        }
        axes.push(axis(lo, hi, m));
    }

    let per = m.pow(d as u32);
    let mut rows: Vec<f64> = Vec::with_capacity(per * d * constraints.len());
    let mut dims = Vec::new();
    let mut dirs = Vec::new();
    for &(g, dir) in constraints {
        for flat in 0..per {
            // last axis varies fastest
            let mut rem = flat;
            let mut point = vec![0.0; d];
            for j in (0..d).rev() {
                point[j] = axes[j][rem % m];
                rem /= m;
            }
            rows.extend(point);
            dims.push(g);
            dirs.push(dir);
        }
    }

    let total = dims.len();
    let keep: Vec<usize> = if total > policy.cap {
        let mut rng = ChaCha8Rng::seed_from_u64(SUBSAMPLE_SEED);
        (0..policy.cap)
            .map(|j| {
                let lo = j * total / policy.cap;
                let hi = (j + 1) * total / policy.cap;
                lo + rng.random_range(0..hi - lo)
            })
            .collect()
    } else {
        (0..total).collect()
    };

    let mut loc = Vec::with_capacity(keep.len() * d);
    for &k in &keep {
        loc.extend_from_slice(&rows[k * d..(k + 1) * d]);
    }
    DerivativePointSet::new(
        &DMatrix::from_row_slice(keep.len(), d, &loc),
        keep.iter().map(|&k| dims[k]).collect(),
        keep.iter().map(|&k| dirs[k]).collect(),
    )
}
