//! Standard normal CDF helpers and probit-tilted Gaussian moments.

use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Below this argument Φ is evaluated through a continued fraction for the
/// Mills ratio instead of `erfc`.
const TAIL_SWITCH: f64 = -8.0;
const CF_TERMS: usize = 120;

fn ln_npdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * PI).ln()
}

pub fn npdf(z: f64) -> f64 {
    ln_npdf(z).exp()
}

/// `Φ(z) = ½ erfc(−z/√2)`.
pub fn probit(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `x + 1/(x + 2/(x + 3/(x + …)))`, which equals `N(−x)/Φ(−x)` for `x > 0`.
fn mills_denominator(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=CF_TERMS).rev() {
        t = x + k as f64 / t;
    }
    t
}

/// `ln Φ(z)`, finite for every finite `z`.
pub fn log_probit(z: f64) -> f64 {
    if z < TAIL_SWITCH {
        ln_npdf(z) - mills_denominator(-z).ln()
    } else {
        probit(z).ln()
    }
}

/// Inverse Mills ratio `N(z)/Φ(z)`, never a literal 0/0.
pub fn inverse_mills(z: f64) -> f64 {
    if z < TAIL_SWITCH {
        mills_denominator(-z)
    } else {
        npdf(z) / probit(z)
    }
}

/// Gaussian cavity `N(mean, var)` for one derivative latent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    pub mean: f64,
    pub var: f64,
}

/// Moments of `N(f | μ, σ²) · Φ(s f / ν)` (normalizer, mean, variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedMoments {
    pub log_z: f64,
    pub mean: f64,
    pub var: f64,
    /// Fraction of cavity variance removed: `var = σ²(1 − κ)`.
    pub kappa: f64,
}

pub fn tilted_moments(cavity: Cavity, nu: f64, sign: f64) -> TiltedMoments {
    let Cavity { mean, var } = cavity;
    let scale = (nu * nu + var).sqrt();
    let z = sign * mean / scale;
    let r = inverse_mills(z);
    let kappa = var / (nu * nu + var) * r * (z + r);
    TiltedMoments {
        log_z: log_probit(z),
        mean: mean + sign * var * r / scale,
        var: var * (1.0 - kappa),
        kappa,
    }
}

/// Gaussian site `Z̃ N(f | μ̃, σ̃²)` stored in natural parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    /// `1/σ̃²`; zero means a flat site.
    pub precision: f64,
    /// `μ̃/σ̃²`.
    pub shift: f64,
    pub log_norm: f64,
}

impl Site {
    pub const FLAT: Site = Site {
        precision: 0.0,
        shift: 0.0,
        log_norm: 0.0,
    };

    pub fn var(&self) -> f64 {
        1.0 / self.precision
    }

    pub fn mean(&self) -> f64 {
        if self.precision > 0.0 {
            self.shift / self.precision
        } else {
            0.0
        }
    }
}

/// Moment-matches one probit factor against its cavity and returns the
/// site obtained by dividing the tilted Gaussian by the cavity.
///
/// Natural parameters are formed directly from `κ` to avoid subtracting
/// nearly equal precisions when the constraint is inactive.
pub fn ep_update_site(cavity: Cavity, nu: f64, sign: f64) -> Site {
    let t = tilted_moments(cavity, nu, sign);
    let kappa = t.kappa.clamp(0.0, 1.0 - f64::EPSILON);
    let denom = cavity.var * (1.0 - kappa);
    let delta = t.mean - cavity.mean;
    let precision = (kappa / denom).max(0.0);
    let shift = (cavity.mean * kappa + delta) / denom;
    let log_norm = if precision > 0.0 {
        let site_var = 1.0 / precision;
        let mu = shift * site_var;
        let s = cavity.var + site_var;
        t.log_z + 0.5 * (2.0 * PI * s).ln() + (cavity.mean - mu).powi(2) / (2.0 * s)
    } else {
        f64::INFINITY
    };
    Site {
        precision,
        shift,
        log_norm,
    }
}
