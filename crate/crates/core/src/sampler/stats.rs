use rand::Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Domain};
use crate::error::{Error, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 2000;

/// Sample mean and unbiased variance with percentile-bootstrap 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub retained: u64,
    pub mean: f64,
    pub variance: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_ci_lo: f64,
    pub mean_ci_hi: f64,
}

impl VarianceEstimate {
    pub fn contains(&self, variance: f64) -> bool {
        self.ci_lo <= variance && variance <= self.ci_hi
    }
}

/// `(mean, unbiased variance)` of weighted points; weights are counts.
fn moments(points: &[(f64, u64)], shift: f64) -> (f64, f64) {
    let n: u64 = points.iter().map(|p| p.1).sum();
    let mean = points.iter().map(|&(x, c)| (x - shift) * c as f64).sum::<f64>() / n as f64;
    let ss: f64 = points.iter().map(|&(x, c)| (x - shift - mean).powi(2) * c as f64).sum();
    (mean + shift, ss / (n - 1) as f64)
}

fn percentile_interval(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(|a, b| a.total_cmp(b));
    let b = v.len();
    let lo = ((0.025 * b as f64).floor() as usize).min(b - 1);
    let hi = (((0.975 * b as f64).ceil() as usize).max(1) - 1).min(b - 1);
    (v[lo], v[hi])
}

fn check_count(n: u64) -> Result<()> {
    match n {
        0 => Err(Error::AllDiscarded),
        1 => Err(Error::TooFewSamples { needed: 2, got: 1 }),
        _ => Ok(()),
    }
}

/// Bootstrap over a histogram of distinct values: each resample is a
/// multinomial draw built from sequential binomials.
pub fn histogram_variance_with_ci(points: &[(f64, u64)], seed: u64) -> Result<VarianceEstimate> {
    let points: Vec<(f64, u64)> = points.iter().copied().filter(|p| p.1 > 0).collect();
    let n: u64 = points.iter().map(|p| p.1).sum();
    check_count(n)?;
    let (mean, variance) = moments(&points, 0.0);
    let draws: Vec<(f64, f64)> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Domain::Bootstrap, b as u64);
            let mut left = n;
            let mut mass = n;
            let resampled: Vec<(f64, u64)> = points
                .iter()
                .map(|&(x, c)| {
                    let k = if left == 0 {
                        0
                    } else if c == mass {
                        left
                    } else {
                        let p = (c as f64 / mass as f64).clamp(0.0, 1.0);
                        Binomial::new(left, p).map(|d| d.sample(&mut rng)).unwrap_or(0)
                    };
                    left -= k;
                    mass -= c;
                    (x, k)
                })
                .collect();
            moments(&resampled, mean)
        })
        .collect();
    finish(n, mean, variance, draws)
}

/// Bootstrap over raw samples. Heavily repeated values (lattice-valued
/// centroids) go through the histogram path, which is equivalent and cheaper.
pub fn variance_with_ci(samples: &[f64], seed: u64) -> Result<VarianceEstimate> {
    check_count(samples.len() as u64)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut points: Vec<(f64, u64)> = Vec::new();
    for x in sorted {
        match points.last_mut() {
            Some(last) if last.0 == x => last.1 += 1,
            _ => points.push((x, 1)),
        }
    }
    if points.len() * 20 < samples.len() {
        return histogram_variance_with_ci(&points, seed);
    }
    let n = samples.len();
    let as_points: Vec<(f64, u64)> = samples.iter().map(|&x| (x, 1)).collect();
    let (mean, variance) = moments(&as_points, 0.0);
    let draws: Vec<(f64, f64)> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Domain::Bootstrap, b as u64);
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..n {
                let d = samples[rng.random_range(0..n)] - mean;
                s += d;
                ss += d * d;
            }
            let m = s / n as f64;
            (m + mean, (ss - n as f64 * m * m) / (n - 1) as f64)
        })
        .collect();
    finish(n as u64, mean, variance, draws)
}

fn finish(n: u64, mean: f64, variance: f64, draws: Vec<(f64, f64)>) -> Result<VarianceEstimate> {
    let (mean_ci_lo, mean_ci_hi) = percentile_interval(draws.iter().map(|d| d.0).collect());
    let (ci_lo, ci_hi) = percentile_interval(draws.iter().map(|d| d.1.max(0.0)).collect());
    Ok(VarianceEstimate { retained: n, mean, variance, ci_lo, ci_hi, mean_ci_lo, mean_ci_hi })
}
