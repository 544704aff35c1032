use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Column, Dataset, Split};

pub const LOGISTIC_RANGE: (f64, f64) = (-3.0, 3.0);
/// Grain diameter range in micrometres.
pub const HALLPETCH_RANGE: (f64, f64) = (15.0, 350.0);

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Yield strength in MPa for grain size `d` in micrometres.
pub fn hallpetch_mean(d: f64) -> f64 {
    16.47 + 0.0000288 / (1e-6 * d).powf(1.3)
}

/// Noise std in MPa; the variance `2.2e10·d³` is read with `d` in metres.
pub fn hallpetch_noise_std(d: f64) -> f64 {
    (2.2e10 * (1e-6 * d).powi(3)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseKind {
    Homoscedastic { std: f64 },
    /// `scale · hallpetch_noise_std(x)`.
    HallPetch { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn std_at(&self, x: f64) -> f64 {
        match self.kind {
            NoiseKind::Homoscedastic { std } => std.max(0.0),
            NoiseKind::HallPetch { scale } => scale.abs() * hallpetch_noise_std(x),
        }
    }

    fn draw(&self, xs: &[f64]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        xs.iter()
            .map(|&x| {
                let e: f64 = StandardNormal.sample(&mut rng);
                e * self.std_at(x)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogisticSampling {
    #[default]
    Equispaced,
    Uniform,
}

fn equispaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn one_column(input: Column, xs: &[f64], output: Column, ys: Vec<f64>) -> Dataset {
    let n = xs.len();
    Dataset::new(
        vec![input],
        DMatrix::from_column_slice(n, 1, xs),
        output,
        ys,
        vec![Split::Train; n],
    )
    .expect("generated data is finite")
}

/// `y = logistic(x) + ε` on [-3, 3]. `noise_std = 0` gives the noiseless variant.
pub fn gen_logistic_with(n: usize, seed: u64, noise_std: f64, sampling: LogisticSampling) -> Dataset {
    assert!(n >= 2, "need at least two samples");
    let (lo, hi) = LOGISTIC_RANGE;
    let xs = match sampling {
        LogisticSampling::Equispaced => equispaced(lo, hi, n),
        LogisticSampling::Uniform => {
            // separate stream from the noise draws
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            v
        }
    };
    let noise = NoiseSpec {
        kind: NoiseKind::Homoscedastic { std: noise_std },
        seed,
    }
    .draw(&xs);
    let ys = xs.iter().zip(noise).map(|(x, e)| logistic(*x) + e).collect();
    one_column(Column::new("x", ""), &xs, Column::new("y", ""), ys)
        .with_provenance(format!("logistic n={n} seed={seed} noise_std={noise_std}"))
}

/// Equispaced logistic samples with `N(0, 0.1²)` noise.
pub fn gen_logistic(n: usize, seed: u64) -> Dataset {
    gen_logistic_with(n, seed, 0.1, LogisticSampling::Equispaced)
}

/// Hall-Petch yield strength on equispaced grain sizes in [15, 350] µm.
pub fn gen_hallpetch(n: usize, seed: u64, noise_scale: f64) -> Dataset {
    assert!(n >= 2, "need at least two samples");
    let (lo, hi) = HALLPETCH_RANGE;
    let ds = equispaced(lo, hi, n);
    let noise = NoiseSpec {
        kind: NoiseKind::HallPetch { scale: noise_scale },
        seed,
    }
    .draw(&ds);
    let ys = ds.iter().zip(noise).map(|(d, e)| hallpetch_mean(*d) + e).collect();
    one_column(Column::new("d", "um"), &ds, Column::new("sigma_y", "MPa"), ys).with_provenance(
        format!("hallpetch n={n} seed={seed} noise_scale={noise_scale}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        assert_relative_eq!(logistic(3.0), 0.9525741268224334, max_relative = 1e-15);
        let clean = gen_logistic_with(7, 3, 0.0, LogisticSampling::Equispaced);
        assert_eq!(clean.y()[3], 0.5);
        assert!(clean.y().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn hallpetch_values() {
        assert_relative_eq!(hallpetch_mean(350.0), 17.3655792652732, max_relative = 1e-12);
        assert_relative_eq!(hallpetch_mean(15.0), 70.23180619879358, max_relative = 1e-12);
        let stds: Vec<f64> = (15..=350).map(|d| hallpetch_noise_std(d as f64)).collect();
        assert!(stds.windows(2).all(|w| w[1] > w[0]));
        assert!(stds[0] > 0.008 && stds[0] < 0.01);
        assert!(*stds.last().unwrap() > 0.96 && *stds.last().unwrap() < 0.98);
        let clean = gen_hallpetch(20, 0, 0.0);
        assert!(clean.y().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(gen_logistic(10, 1), gen_logistic(10, 1));
        assert_ne!(gen_logistic(10, 1).y(), gen_logistic(10, 2).y());
        assert_eq!(gen_hallpetch(20, 4, 1.0), gen_hallpetch(20, 4, 1.0));
        let u = gen_logistic_with(10, 5, 0.1, LogisticSampling::Uniform);
        assert!(u.x().iter().all(|v| (-3.0..=3.0).contains(v)));
    }
}
