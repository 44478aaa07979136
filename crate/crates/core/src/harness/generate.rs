//! Synthetic pairs `x = L_x e_x`, `y = delta + L_y e_y` with standardized
//! noise `e` and Cholesky factors `L` of the declared covariances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};

use super::config::{Covariance, ExperimentConfig, Noise, VarianceMode};
use crate::error::Result;
use crate::series::TimeSeriesPair;

pub const AR_RHO: f64 = 0.5;

/// Shape parameter of the skew-normal noise.
pub const SKEW_SHAPE: f64 = 10.0;

pub const T_DOF: f64 = 20.0;

/// Generator streams within one trial.
pub const DATA_STREAM: u64 = 0;
pub const PERMUTATION_STREAM: u64 = 1;

/// Generator keyed by `(seed, trial, stream)`; independent of the order in
/// which trials run.
pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | (stream & 0xff));
    rng
}

pub fn covariance_matrix(cov: Covariance, len: usize) -> DMatrix<f64> {
    match cov {
        Covariance::Independence => DMatrix::identity(len, len),
        Covariance::ArCorrelation => {
            DMatrix::from_fn(len, len, |i, j| AR_RHO.powi((i as i32 - j as i32).abs()))
        }
    }
}

/// One draw with mean 0 and variance 1.
pub fn standardized_noise<R: Rng + ?Sized>(noise: Noise, rng: &mut R) -> f64 {
    match noise {
        Noise::Gaussian => rng.sample(StandardNormal),
        Noise::Laplace => {
            let e: f64 = rng.sample(Exp1);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * e / std::f64::consts::SQRT_2
        }
        Noise::SkewNormal => {
            let d = SKEW_SHAPE / (1.0 + SKEW_SHAPE * SKEW_SHAPE).sqrt();
            let (u0, u1): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let v = d * u0.abs() + (1.0 - d * d).sqrt() * u1;
            let mean = d * (2.0 / std::f64::consts::PI).sqrt();
            let var = 1.0 - 2.0 * d * d / std::f64::consts::PI;
            (v - mean) / var.sqrt()
        }
        Noise::StudentT20 => {
            let t: f64 = StudentT::new(T_DOF).expect("valid dof").sample(rng);
            t * ((T_DOF - 2.0) / T_DOF).sqrt()
        }
    }
}

fn colored_noise<R: Rng + ?Sized>(noise: Noise, chol: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let e = DVector::from_fn(chol.nrows(), |_, _| standardized_noise(noise, rng));
    (chol * e).iter().copied().collect()
}

fn sample_variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// The pair for `trial` under `config`, with the covariance the method is
/// told: the true one when variances are known, a diagonal sample-variance
/// estimate otherwise.
pub fn generate_pair(config: &ExperimentConfig, trial: u64) -> Result<TimeSeriesPair> {
    config.validate()?;
    let mut rng = trial_rng(config.seed, trial, DATA_STREAM);
    let sigma_x = covariance_matrix(config.covariance, config.n);
    let sigma_y = covariance_matrix(config.covariance, config.m);
    let chol = |s: &DMatrix<f64>| s.clone().cholesky().expect("declared covariance is positive definite").l();
    let x = colored_noise(config.noise, &chol(&sigma_x), &mut rng);
    let y: Vec<f64> = colored_noise(config.noise, &chol(&sigma_y), &mut rng).iter().map(|v| v + config.delta).collect();
    match config.variance_mode {
        VarianceMode::Known => TimeSeriesPair::new(x, y, sigma_x, sigma_y),
        VarianceMode::Estimated => {
            let (vx, vy) = (sample_variance(&x), sample_variance(&y));
            TimeSeriesPair::with_variances(x, y, vx, vy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_draws_are_centred() {
        let cfg = ExperimentConfig { n: 10, m: 10, ..Default::default() };
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in 0..5000 {
            let pair = generate_pair(&cfg, t).unwrap();
            sum += pair.x().iter().chain(pair.y()).sum::<f64>();
            count += 20;
        }
        let mean = sum / count as f64;
        let se = 1.0 / (count as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn ar_lag_one_correlation() {
        let cfg = ExperimentConfig { n: 10, m: 10, covariance: Covariance::ArCorrelation, ..Default::default() };
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for t in 0..10_000 {
            let pair = generate_pair(&cfg, t).unwrap();
            let x = pair.x();
            sxy += x[4] * x[5];
            sxx += x[4] * x[4];
        }
        let r = sxy / sxx;
        assert!((r - 0.5).abs() < 0.03, "lag-1 correlation {r}");
    }

    #[test]
    fn reproducible_per_trial() {
        let cfg = ExperimentConfig { noise: Noise::SkewNormal, delta: 2.0, ..Default::default() };
        let a = generate_pair(&cfg, 17).unwrap();
        let b = generate_pair(&cfg, 17).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        assert_ne!(generate_pair(&cfg, 18).unwrap().x(), a.x());
        let other_seed = ExperimentConfig { seed: 1, ..cfg };
        assert_ne!(generate_pair(&other_seed, 17).unwrap().x(), a.x());
    }

    #[test]
    fn noise_families_are_standardized() {
        for noise in Noise::ALL {
            let mut rng = trial_rng(3, 0, 0);
            let draws: Vec<f64> = (0..200_000).map(|_| standardized_noise(*noise, &mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let var = sample_variance(&draws);
            assert!(mean.abs() < 0.01, "{noise}: mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "{noise}: variance {var}");
        }
    }

    #[test]
    fn estimated_variance_is_diagonal() {
        let cfg = ExperimentConfig { variance_mode: VarianceMode::Estimated, ..Default::default() };
        let pair = generate_pair(&cfg, 0).unwrap();
        let sx = pair.sigma_x();
        assert_eq!(sx[(0, 1)], 0.0);
        assert!((sx[(0, 0)] - sample_variance(pair.x())).abs() < 1e-15);
    }
}
