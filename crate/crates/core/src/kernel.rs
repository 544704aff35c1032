//! Squared-exponential covariance, its derivative cross-covariances, and
//! assembly of the joint (values, derivatives) covariance matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::exec::Execution;

/// Kernel and noise hyperparameters in natural (positive) space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// η, in output units. The kernel amplitude is η².
    pub signal_std: f64,
    /// ρ_d, one per input dimension, in input units.
    pub length_scales: Vec<f64>,
    /// σ, in output units.
    pub noise_std: f64,
}

impl Hyperparameters {
    pub fn new(signal_std: f64, length_scales: Vec<f64>, noise_std: f64) -> Result<Self> {
        let hp = Hyperparameters {
            signal_std,
            length_scales,
            noise_std,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_std.is_finite() && self.signal_std > 0.0) {
            return Err(GpError::InvalidHyperparameters(format!(
                "signal_std must be positive, got {}",
                self.signal_std
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(GpError::InvalidHyperparameters(format!(
                "noise_std must be non-negative, got {}",
                self.noise_std
            )));
        }
        if self.length_scales.is_empty() {
            return Err(GpError::InvalidHyperparameters(
                "at least one length scale required".into(),
            ));
        }
        if let Some(r) = self
            .length_scales
            .iter()
            .find(|r| !(r.is_finite() && **r > 0.0))
        {
            return Err(GpError::InvalidHyperparameters(format!(
                "length scales must be positive, got {r}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn signal_var(&self) -> f64 {
        self.signal_std * self.signal_std
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    /// Number of entries in the log-space parameter vector.
    pub fn n_params(&self) -> usize {
        self.dim() + 2
    }

    /// `[ln η, ln ρ_1..ln ρ_D, ln σ]`. A zero noise std is floored at
    /// `1e-12·η` so the vector stays finite.
    pub fn to_log(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.push(self.signal_std.ln());
        v.extend(self.length_scales.iter().map(|r| r.ln()));
        v.push(self.noise_std.max(1e-12 * self.signal_std).ln());
        v
    }

    pub fn from_log(theta: &[f64]) -> Result<Self> {
        if theta.len() < 3 {
            return Err(GpError::Shape(format!(
                "log-parameter vector needs at least 3 entries, got {}",
                theta.len()
            )));
        }
        let d = theta.len() - 2;
        Hyperparameters::new(
            theta[0].exp(),
            theta[1..=d].iter().map(|t| t.exp()).collect(),
            theta[d + 1].exp(),
        )
    }
}

/// Sign orientation of a derivative constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+")]
    Increasing,
    #[serde(rename = "-")]
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" | "inc" | "increasing" => Some(Direction::Increasing),
            "-" | "dec" | "decreasing" => Some(Direction::Decreasing),
            _ => None,
        }
    }
}

/// Virtual derivative locations: point `i` constrains `s_i · ∂f/∂x_{d_i} ≥ 0`
/// at `locations.row(i)`. Dimension indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativePointSet {
    /// Row-major M×D locations.
    locations: Vec<f64>,
    dim: usize,
    dims: Vec<usize>,
    directions: Vec<Direction>,
}

impl DerivativePointSet {
    pub fn empty(dim: usize) -> Self {
        DerivativePointSet {
            locations: Vec::new(),
            dim,
            dims: Vec::new(),
            directions: Vec::new(),
        }
    }

    pub fn new(
        locations: &DMatrix<f64>,
        dims: Vec<usize>,
        directions: Vec<Direction>,
    ) -> Result<Self> {
        let m = locations.nrows();
        let d = locations.ncols();
        if dims.len() != m || directions.len() != m {
            return Err(GpError::Shape(format!(
                "{m} locations but {} dims and {} directions",
                dims.len(),
                directions.len()
            )));
        }
        if let Some(bad) = dims.iter().find(|&&g| g >= d) {
            return Err(GpError::Shape(format!(
                "constrained dimension {bad} out of range for D={d}"
            )));
        }
        if locations.iter().any(|v| !v.is_finite()) {
            return Err(GpError::InvalidInput("non-finite inducing location".into()));
        }
        Ok(DerivativePointSet {
            locations: row_major(locations),
            dim: d,
            dims,
            directions,
        })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn locations(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.locations)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn sign(&self, i: usize) -> f64 {
        self.directions[i].sign()
    }

    /// Returns the set with its points reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut locations = Vec::with_capacity(self.locations.len());
        for &p in perm {
            locations.extend_from_slice(self.location(p));
        }
        DerivativePointSet {
            locations,
            dim: self.dim,
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            directions: perm.iter().map(|&p| self.directions[p]).collect(),
        }
    }
}

pub(crate) fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.nrows() {
        out.extend(x.row(i).iter());
    }
    out
}

fn check_point(x: &[f64], hp: &Hyperparameters) -> Result<()> {
    if x.len() != hp.dim() {
        return Err(GpError::Shape(format!(
            "point has dimension {} but hyperparameters have {}",
            x.len(),
            hp.dim()
        )));
    }
    Ok(())
}

fn check_dim(g: usize, hp: &Hyperparameters) -> Result<()> {
    if g >= hp.dim() {
        return Err(GpError::Shape(format!(
            "dimension index {g} out of range for D={}",
            hp.dim()
        )));
    }
    Ok(())
}

#[inline]
fn se_unchecked(a: &[f64], b: &[f64], rho: &[f64], amp: f64) -> f64 {
    let mut s = 0.0;
    for ((ai, bi), r) in a.iter().zip(b).zip(rho) {
        let t = (ai - bi) / r;
        s += t * t;
    }
    amp * (-0.5 * s).exp()
}

#[inline]
fn deriv_f_unchecked(a: &[f64], g: usize, b: &[f64], rho: &[f64], amp: f64) -> f64 {
    let r2 = rho[g] * rho[g];
    -se_unchecked(a, b, rho, amp) * (a[g] - b[g]) / r2
}

#[inline]
fn deriv_deriv_unchecked(a: &[f64], g: usize, b: &[f64], h: usize, rho: &[f64], amp: f64) -> f64 {
    let rg2 = rho[g] * rho[g];
    let rh2 = rho[h] * rho[h];
    let delta = if g == h { 1.0 / rg2 } else { 0.0 };
    // Written as a product of two per-dimension factors so that swapping
    // (a, g) with (b, h) gives a bitwise-identical value.
    let cross = ((a[g] - b[g]) / rg2) * ((a[h] - b[h]) / rh2);
    se_unchecked(a, b, rho, amp) * (delta - cross)
}

/// `η² exp(−½ Σ_d ρ_d⁻² (x_i,d − x_j,d)²)`.
pub fn se_cov(xi: &[f64], xj: &[f64], hp: &Hyperparameters) -> Result<f64> {
    check_point(xi, hp)?;
    check_point(xj, hp)?;
    Ok(se_unchecked(xi, xj, &hp.length_scales, hp.signal_var()))
}

/// `Cov[∂f(x_i)/∂x_{i,g}, f(x_j)]`.
pub fn cov_deriv_f(xi: &[f64], g: usize, xj: &[f64], hp: &Hyperparameters) -> Result<f64> {
    check_point(xi, hp)?;
    check_point(xj, hp)?;
    check_dim(g, hp)?;
    Ok(deriv_f_unchecked(xi, g, xj, &hp.length_scales, hp.signal_var()))
}

/// `Cov[∂f(x_i)/∂x_{i,g}, ∂f(x_j)/∂x_{j,h}]`.
pub fn cov_deriv_deriv(
    xi: &[f64],
    g: usize,
    xj: &[f64],
    h: usize,
    hp: &Hyperparameters,
) -> Result<f64> {
    check_point(xi, hp)?;
    check_point(xj, hp)?;
    check_dim(g, hp)?;
    check_dim(h, hp)?;
    Ok(deriv_deriv_unchecked(
        xi,
        g,
        xj,
        h,
        &hp.length_scales,
        hp.signal_var(),
    ))
}

/// One row/column of the joint latent vector.
#[derive(Clone, Copy)]
enum Latent<'a> {
    Value(&'a [f64]),
    /// Signed derivative along `dim`.
    Slope(&'a [f64], usize, f64),
}

#[inline]
fn latent_cov(a: Latent<'_>, b: Latent<'_>, rho: &[f64], amp: f64) -> f64 {
    match (a, b) {
        (Latent::Value(x), Latent::Value(y)) => se_unchecked(x, y, rho, amp),
        (Latent::Slope(x, g, s), Latent::Value(y)) | (Latent::Value(y), Latent::Slope(x, g, s)) => {
            s * deriv_f_unchecked(x, g, y, rho, amp)
        }
        (Latent::Slope(x, g, s), Latent::Slope(y, h, t)) => {
            s * t * deriv_deriv_unchecked(x, g, y, h, rho, amp)
        }
    }
}

struct JointLayout<'a> {
    x: Vec<f64>,
    d: usize,
    dps: &'a DerivativePointSet,
}

impl<'a> JointLayout<'a> {
    fn new(x: &DMatrix<f64>, dps: &'a DerivativePointSet, hp: &Hyperparameters) -> Result<Self> {
        let d = hp.dim();
        if x.ncols() != d {
            return Err(GpError::Shape(format!(
                "inputs have {} columns but hyperparameters have {d} length scales",
                x.ncols()
            )));
        }
        if !dps.is_empty() && dps.dim() != d {
            return Err(GpError::Shape(format!(
                "derivative points have dimension {} but inputs have {d}",
                dps.dim()
            )));
        }
        Ok(JointLayout {
            x: row_major(x),
            d,
            dps,
        })
    }

    fn n(&self) -> usize {
        self.x.len() / self.d.max(1)
    }

    fn len(&self) -> usize {
        self.n() + self.dps.len()
    }

    fn latent(&self, k: usize) -> Latent<'_> {
        let n = self.n();
        if k < n {
            Latent::Value(&self.x[k * self.d..(k + 1) * self.d])
        } else {
            let i = k - n;
            Latent::Slope(self.dps.location(i), self.dps.dims()[i], self.dps.sign(i))
        }
    }
}

/// Prior variance of each joint latent: η² for values, η²ρ_g⁻² for slopes.
/// Used as the per-row jitter scale.
pub fn joint_prior_variances(n: usize, dps: &DerivativePointSet, hp: &Hyperparameters) -> Vec<f64> {
    let amp = hp.signal_var();
    let mut v = vec![amp; n];
    v.extend(dps.dims().iter().map(|&g| amp / (hp.length_scales[g] * hp.length_scales[g])));
    v
}

/// Joint prior covariance of `[f(X); s ⊙ f'(X_m)]`, shape (N+M)×(N+M).
pub fn assemble_blocks(
    x: &DMatrix<f64>,
    dps: &DerivativePointSet,
    hp: &Hyperparameters,
) -> Result<DMatrix<f64>> {
    assemble_blocks_with(x, dps, hp, Execution::default())
}

pub fn assemble_blocks_with(
    x: &DMatrix<f64>,
    dps: &DerivativePointSet,
    hp: &Hyperparameters,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    let layout = JointLayout::new(x, dps, hp)?;
    let t = layout.len();
    let rho = &hp.length_scales;
    let amp = hp.signal_var();
    let mut buf = vec![0.0; t * t];
    exec.for_each_chunk(&mut buf, t, |i, row| {
        let a = layout.latent(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = latent_cov(a, layout.latent(j), rho, amp);
        }
    });
    Ok(DMatrix::from_row_slice(t, t, &buf))
}

/// The derivative rows `[K_{f',f} | K_{f',f'}]` of the joint matrix, M×(N+M).
pub fn derivative_rows(
    x: &DMatrix<f64>,
    dps: &DerivativePointSet,
    hp: &Hyperparameters,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    let layout = JointLayout::new(x, dps, hp)?;
    let n = x.nrows();
    let t = layout.len();
    let rho = &hp.length_scales;
    let amp = hp.signal_var();
    let mut buf = vec![0.0; (t - n) * t];
    exec.for_each_chunk(&mut buf, t, |i, row| {
        let a = layout.latent(n + i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = latent_cov(a, layout.latent(j), rho, amp);
        }
    });
    Ok(DMatrix::from_row_slice(t - n, t, &buf))
}

/// `K_ff` for the inputs alone.
pub fn value_covariance(x: &DMatrix<f64>, hp: &Hyperparameters, exec: Execution) -> Result<DMatrix<f64>> {
    assemble_blocks_with(x, &DerivativePointSet::empty(hp.dim()), hp, exec)
}

/// What a query row represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    /// The latent value `f(x*)`.
    Value,
    /// The derivative `∂f(x*)/∂x*_d` (unsigned).
    Slope(usize),
}

/// Cross-covariance between query latents (one per row of `xq`) and the
/// joint latent vector of `(x, dps)`. Shape Q×(N+M).
pub fn cross_covariance(
    xq: &DMatrix<f64>,
    kind: QueryKind,
    x: &DMatrix<f64>,
    dps: &DerivativePointSet,
    hp: &Hyperparameters,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    let layout = JointLayout::new(x, dps, hp)?;
    if xq.ncols() != hp.dim() {
        return Err(GpError::Shape(format!(
            "queries have {} columns but model has {}",
            xq.ncols(),
            hp.dim()
        )));
    }
    if let QueryKind::Slope(g) = kind {
        check_dim(g, hp)?;
    }
    let q = row_major(xq);
    let d = hp.dim();
    let t = layout.len();
    let rho = &hp.length_scales;
    let amp = hp.signal_var();
    let mut buf = vec![0.0; xq.nrows() * t];
    exec.for_each_chunk(&mut buf, t, |i, row| {
        let p = &q[i * d..(i + 1) * d];
        let a = match kind {
            QueryKind::Value => Latent::Value(p),
            QueryKind::Slope(g) => Latent::Slope(p, g, 1.0),
        };
        for (j, out) in row.iter_mut().enumerate() {
            *out = latent_cov(a, layout.latent(j), rho, amp);
        }
    });
    Ok(DMatrix::from_row_slice(xq.nrows(), t, &buf))
}

/// Prior variance of a query latent.
pub fn query_prior_variance(kind: QueryKind, hp: &Hyperparameters) -> f64 {
    match kind {
        QueryKind::Value => hp.signal_var(),
        QueryKind::Slope(g) => hp.signal_var() / (hp.length_scales[g] * hp.length_scales[g]),
    }
}

/// Derivatives of `K_ff` with respect to each log-parameter
/// `(ln η, ln ρ_1..ln ρ_D)`. The noise term is handled by the caller.
pub(crate) fn value_covariance_log_grads(
    x: &DMatrix<f64>,
    kff: &DMatrix<f64>,
    hp: &Hyperparameters,
) -> Vec<DMatrix<f64>> {
    let n = x.nrows();
    let mut out = Vec::with_capacity(hp.dim() + 1);
    out.push(kff * 2.0);
    for (d, rho) in hp.length_scales.iter().enumerate() {
        let r2 = rho * rho;
        out.push(DMatrix::from_fn(n, n, |i, j| {
            let diff = x[(i, d)] - x[(j, d)];
            kff[(i, j)] * diff * diff / r2
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hp1() -> Hyperparameters {
        Hyperparameters::new(1.0, vec![1.0], 0.0).unwrap()
    }

    #[test]
    fn se_examples() {
        let h = Hyperparameters::new(3.0, vec![0.7, 2.0], 0.1).unwrap();
        assert_eq!(se_cov(&[0.3, -1.0], &[0.3, -1.0], &h).unwrap(), 9.0);
        let v = se_cov(&[0.0], &[2f64.sqrt()], &hp1()).unwrap();
        assert_relative_eq!(v, 0.367879441171442, max_relative = 1e-12);
        let h2 = Hyperparameters::new(2.0, vec![1.0, 1.0], 0.0).unwrap();
        assert_eq!(se_cov(&[1.0, 2.0], &[1.0, 2.0], &h2).unwrap(), 4.0);
    }

    #[test]
    fn deriv_examples() {
        let h = hp1();
        assert_eq!(cov_deriv_f(&[0.4], 0, &[0.4], &h).unwrap(), 0.0);
        let v = cov_deriv_f(&[1.0], 0, &[0.0], &h).unwrap();
        assert_relative_eq!(v, -0.606530659712633, max_relative = 1e-12);
        let h3 = Hyperparameters::new(1.3, vec![0.5, 2.0, 1.1], 0.0).unwrap();
        let (a, b) = ([0.1, 0.9, -0.4], [1.2, -0.3, 0.5]);
        for g in 0..3 {
            assert_eq!(
                cov_deriv_f(&a, g, &b, &h3).unwrap(),
                -cov_deriv_f(&b, g, &a, &h3).unwrap()
            );
        }
    }

    #[test]
    fn deriv_deriv_examples() {
        let h = Hyperparameters::new(1.5, vec![0.5, 2.0], 0.0).unwrap();
        let x = [0.2, 0.3];
        assert_relative_eq!(
            cov_deriv_deriv(&x, 0, &x, 0, &h).unwrap(),
            2.25 / 0.25,
            max_relative = 1e-14
        );
        assert_eq!(cov_deriv_deriv(&x, 0, &x, 1, &h).unwrap(), 0.0);
        assert_eq!(cov_deriv_deriv(&[1.0], 0, &[0.0], 0, &hp1()).unwrap(), 0.0);
    }

    #[test]
    fn dimension_errors() {
        let h = hp1();
        assert!(matches!(se_cov(&[0.0, 1.0], &[0.0], &h), Err(GpError::Shape(_))));
        assert!(matches!(cov_deriv_f(&[0.0], 1, &[0.0], &h), Err(GpError::Shape(_))));
        assert!(matches!(
            cov_deriv_deriv(&[0.0], 0, &[0.0], 3, &h),
            Err(GpError::Shape(_))
        ));
    }

    #[test]
    fn assemble_small_cases() {
        let h = Hyperparameters::new(1.7, vec![0.6], 0.0).unwrap();
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 1.5]);
        let k = assemble_blocks(&x, &DerivativePointSet::empty(1), &h).unwrap();
        assert_eq!(k.shape(), (3, 3));

        let x1 = DMatrix::from_row_slice(1, 1, &[0.25]);
        let dps = DerivativePointSet::new(&x1, vec![0], vec![Direction::Increasing]).unwrap();
        let k = assemble_blocks(&x1, &dps, &h).unwrap();
        assert_eq!(k.shape(), (2, 2));
        assert_relative_eq!(k[(0, 0)], 1.7 * 1.7, max_relative = 1e-15);
        assert_eq!(k[(0, 1)], 0.0);
        assert_eq!(k[(1, 0)], 0.0);
        assert_relative_eq!(k[(1, 1)], 1.7 * 1.7 / 0.36, max_relative = 1e-14);
    }

    #[test]
    fn decreasing_sign_negates_cross_block_only() {
        let h = Hyperparameters::new(1.0, vec![1.0], 0.0).unwrap();
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let xm = DMatrix::from_row_slice(2, 1, &[0.3, 0.8]);
        let up = DerivativePointSet::new(&xm, vec![0, 0], vec![Direction::Increasing; 2]).unwrap();
        let down = DerivativePointSet::new(&xm, vec![0, 0], vec![Direction::Decreasing; 2]).unwrap();
        let ku = assemble_blocks(&x, &up, &h).unwrap();
        let kd = assemble_blocks(&x, &down, &h).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let cross = (i < 2) != (j < 2);
                let expect = if cross { -ku[(i, j)] } else { ku[(i, j)] };
                assert_eq!(kd[(i, j)], expect);
            }
        }
    }

    #[test]
    fn log_roundtrip() {
        let h = Hyperparameters::new(0.7, vec![2.0, 0.1], 0.05).unwrap();
        let back = Hyperparameters::from_log(&h.to_log()).unwrap();
        assert_relative_eq!(back.signal_std, 0.7, max_relative = 1e-15);
        assert_relative_eq!(back.length_scales[1], 0.1, max_relative = 1e-15);
        assert_relative_eq!(back.noise_std, 0.05, max_relative = 1e-15);
        assert!(Hyperparameters::new(-1.0, vec![1.0], 0.0).is_err());
        assert!(Hyperparameters::new(1.0, vec![0.0], 0.0).is_err());
        assert!(Hyperparameters::new(1.0, vec![1.0], -0.1).is_err());
    }
}
