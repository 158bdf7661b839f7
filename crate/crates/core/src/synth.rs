//! Seeded synthetic datasets for tests, benchmarks and the `synth` command.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with the given `u64`, so
//! a seed reproduces its dataset bit for bit on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

use crate::error::Result;
use crate::series::TimeSeries;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Noisy samples together with the noise-free values at the same epochs.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: TimeSeries,
    pub truth: Vec<f64>,
}

fn sample(times: Vec<f64>, f: impl Fn(f64) -> f64, noise_sd: f64, rng: &mut ChaCha8Rng) -> Result<Synthetic> {
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("finite noise level");
    let truth: Vec<f64> = times.iter().map(|&t| f(t)).collect();
    let values = truth.iter().map(|v| v + noise.sample(rng)).collect();
    let data = TimeSeries::new(times, values)?;
    // new() sorts; the generators below already emit sorted epochs
    Ok(Synthetic { data, truth })
}

fn sorted_uniform(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    t.sort_by(f64::total_cmp);
    t
}

pub const GRAMACY_LEE_DOMAIN: (f64, f64) = (0.5, 2.5);

/// `sin(10 pi x) / (2x) + (x - 1)^4`.
pub fn gramacy_lee(x: f64) -> f64 {
    (10.0 * PI * x).sin() / (2.0 * x) + (x - 1.0).powi(4)
}

/// `n` uniform epochs on the Gramacy-Lee domain with Gaussian noise.
pub fn gramacy_lee_series(n: usize, noise_sd: f64, seed: u64) -> Result<Synthetic> {
    let mut r = rng(seed);
    let (lo, hi) = GRAMACY_LEE_DOMAIN;
    let t = sorted_uniform(n, lo, hi, &mut r);
    sample(t, gramacy_lee, noise_sd, &mut r)
}

/// Smooth test curve on `[0, 1]`: a damped oscillation on a gentle trend.
pub fn smooth_truth(t: f64) -> f64 {
    (2.0 * PI * t).sin() + 0.5 * t + 0.3 * (5.0 * PI * t).cos() * (-t).exp()
}

pub fn smooth_series(n: usize, noise_sd: f64, seed: u64) -> Result<Synthetic> {
    let mut r = rng(seed);
    let t = sorted_uniform(n, 0.0, 1.0, &mut r);
    sample(t, smooth_truth, noise_sd, &mut r)
}

/// Dense sampling over 2003-2009 followed by a handful of epochs over
/// 2010-2016, mimicking a change of observing mission.
pub fn sampling_gap_series(seed: u64) -> Result<Synthetic> {
    let mut r = rng(seed);
    let mut t = sorted_uniform(60, 2003.0, 2009.9, &mut r);
    t.extend(sorted_uniform(6, 2010.0, 2016.5, &mut r));
    let f = |t: f64| {
        let x = t - 2003.0;
        -0.8 * x - 0.05 * x * x + 0.6 * (2.0 * PI * t).sin()
    };
    sample(t, f, 0.3, &mut r)
}

/// Dense seasonal series, smooth residual component, and sparse
/// observations of their sum.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `h_s` on the dense grid.
    pub dense_model: TimeSeries,
    /// Noisy `h_s + h_dibc` at the sparse epochs.
    pub observations: TimeSeries,
    /// Noise-free `h_s + h_dibc` on the dense grid.
    pub dense_truth: Vec<f64>,
    /// Noise-free `h_dibc` at the observation epochs.
    pub dibc_truth: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionConfig {
    pub start: f64,
    pub end: f64,
    /// Dense-grid spacing in years.
    pub cadence: f64,
    pub seasonal_amplitude: f64,
    pub n_observations: usize,
    pub noise_sd: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            start: 2003.0,
            end: 2013.0,
            cadence: 10.0 / 365.25,
            seasonal_amplitude: 1.0,
            n_observations: 25,
            noise_sd: 0.1,
        }
    }
}

impl DecompositionConfig {
    pub fn seasonal(&self, t: f64) -> f64 {
        self.seasonal_amplitude * (2.0 * PI * t).sin()
    }

    /// Slow thinning that accelerates mid-record.
    pub fn dibc(&self, t: f64) -> f64 {
        let mid = 0.5 * (self.start + self.end);
        -0.5 * (t - self.start) - 6.0 / (1.0 + (-(t - mid) / 0.7).exp())
    }

    /// Largest interpolation error of the dense seasonal series,
    /// `max|h_s''| * cadence^2 / 8`.
    pub fn interpolation_bound(&self) -> f64 {
        self.seasonal_amplitude * (2.0 * PI).powi(2) * self.cadence.powi(2) / 8.0
    }
}

/// The decomposition suite. The first and last observations sit on the ends
/// of the dense grid so the reconstruction covers all of it.
pub fn decomposition_suite(config: &DecompositionConfig, seed: u64) -> Result<Decomposition> {
    let mut r = rng(seed);
    let n_dense = ((config.end - config.start) / config.cadence).floor() as usize + 1;
    let dense_t: Vec<f64> = (0..n_dense).map(|i| config.start + i as f64 * config.cadence).collect();
    let last = dense_t[n_dense - 1];
    let hs: Vec<f64> = dense_t.iter().map(|&t| config.seasonal(t)).collect();
    let dense_truth = dense_t
        .iter()
        .map(|&t| config.seasonal(t) + config.dibc(t))
        .collect();

    let mut obs_t = vec![config.start];
    obs_t.extend(sorted_uniform(config.n_observations.saturating_sub(2), config.start, last, &mut r));
    obs_t.push(last);
    let noise = Normal::new(0.0, config.noise_sd).expect("finite noise level");
    let dibc_truth: Vec<f64> = obs_t.iter().map(|&t| config.dibc(t)).collect();
    let obs_y = obs_t
        .iter()
        .zip(&dibc_truth)
        .map(|(&t, d)| config.seasonal(t) + d + noise.sample(&mut r))
        .collect();

    Ok(Decomposition {
        dense_model: TimeSeries::new(dense_t, hs)?,
        observations: TimeSeries::new(obs_t, obs_y)?,
        dense_truth,
        dibc_truth,
    })
}

/// Truth of [`locality_series`]: oscillations on two time scales over a
/// gentle trend, so that a GCV fit needs many knot spans.
pub fn locality_truth(t: f64) -> f64 {
    (1.9 * t).sin() + 0.5 * (4.3 * t).sin() + 0.1 * t
}

/// Equally spaced samples of [`locality_truth`] on `[0, 10]` for perturbation
/// experiments.
pub fn locality_series(n: usize, noise_sd: f64, seed: u64) -> Result<Synthetic> {
    let mut r = rng(seed);
    let t: Vec<f64> = (0..n).map(|i| 10.0 * i as f64 / (n - 1) as f64).collect();
    sample(t, locality_truth, noise_sd, &mut r)
}
