#![allow(dead_code)]

use monogp::kernel::Direction;
use monogp::{DerivativePointSet, Hyperparameters};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use monogp::ep_monotonic::probit;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn col(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

pub fn random_points(r: &mut ChaCha8Rng, n: usize, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| r.random_range(lo..hi))
}

pub fn random_hp(r: &mut ChaCha8Rng, d: usize) -> Hyperparameters {
    Hyperparameters::new(
        r.random_range(0.5..2.0),
        (0..d).map(|_| r.random_range(0.4..1.5)).collect(),
        r.random_range(0.05..0.5),
    )
    .unwrap()
}

pub struct Fixture {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub hp: Hyperparameters,
}

/// Smooth random data on [0, 2]^d.
pub fn fixture(seed: u64, n: usize, d: usize) -> Fixture {
    let mut r = rng(seed);
    let x = random_points(&mut r, n, d, 0.0, 2.0);
    let y = DVector::from_fn(n, |i, _| {
        let s: f64 = x.row(i).iter().sum();
        s.sin() + 0.1 * r.random_range(-1.0..1.0)
    });
    let hp = random_hp(&mut r, d);
    Fixture { x, y, hp }
}

pub fn grid_dps(lo: f64, hi: f64, m: usize, dir: Direction) -> DerivativePointSet {
    let locs = col(&(0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1).max(1) as f64)
        .collect::<Vec<_>>());
    DerivativePointSet::new(&locs, vec![0; m], vec![dir; m]).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_K: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_G: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_K[7] * fc;
    let mut g = GK_G[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_K[i] * s;
        if i % 2 == 1 {
            g += GK_G[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod over consecutive `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| adapt(&f, w[0], w[1], abs_tol, 40))
        .sum()
}

pub fn npdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Tilted moments by direct integration of N(f | μ, σ²) Φ(s f / ν).
pub fn quadrature_moments(mu: f64, var: f64, nu: f64, s: f64) -> (f64, f64, f64) {
    let sd = var.sqrt();
    let lo = (mu - 14.0 * sd).min(-30.0 * nu);
    let hi = (mu + 14.0 * sd).max(30.0 * nu);
    let mut breaks = vec![lo, -10.0 * nu, -nu, 0.0, nu, 10.0 * nu, hi];
    breaks.extend([mu - sd, mu, mu + sd].iter().filter(|b| **b > lo && **b < hi));
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let raw = |f: f64| npdf((f - mu) / sd) / sd * probit(s * f / nu);
    let peak = (0..=4000)
        .map(|i| raw(lo + (hi - lo) * i as f64 / 4000.0))
        .chain(breaks.iter().map(|&b| raw(b)))
        .fold(0.0f64, f64::max);
    let dens = |f: f64| raw(f) / peak;
    let tol = 1e-14 * (hi - lo).max(1.0);
    let z = integrate(dens, &breaks, tol);
    let m1 = integrate(|f| f * dens(f), &breaks, tol) / z;
    let m2 = integrate(|f| (f - m1).powi(2) * dens(f), &breaks, tol) / z;
    (z * peak, m1, m2)
}
