//! Spatial-frequency content of distributions.
//!
//! A distribution with `period_bins = Some(P)` is first folded modulo `P`
//! bins; for centroid distributions of grid states this makes the discrete
//! spectrum the exact characteristic function on the momentum lattice.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::Distribution;
use crate::error::{Error, Result};

fn folded(d: &Distribution) -> Vec<f64> {
    let period = d.period_bins.unwrap_or(d.len()).max(1);
    let mut f = vec![0.0; period.min(d.len()).max(period)];
    for (i, p) in d.p.iter().enumerate() {
        f[i % period] += p;
    }
    f
}

fn power_spectrum(signal: &[f64], padded_len: usize) -> Vec<f64> {
    let mut buf: Vec<C64> = signal.iter().map(|v| C64::new(*v, 0.0)).collect();
    buf.resize(padded_len, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded_len).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr()).collect()
}

/// Two-sided power spectrum as `(angular frequency, power)` pairs.
pub fn spectrum(d: &Distribution) -> Vec<(f64, f64)> {
    let f = folded(d);
    let n = f.len();
    let power = power_spectrum(&f, n);
    power
        .into_iter()
        .enumerate()
        .map(|(j, p)| {
            let js = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            (2.0 * PI * js / (n as f64 * d.spacing), p)
        })
        .collect()
}

/// Largest `|ω|` whose spectral power exceeds `rel_tol` times the total.
///
/// Only distributions derived from band-limited states obey the `2 N k0`
/// bound; arbitrary inputs can reach the lattice Nyquist frequency.
pub fn spectral_support(d: &Distribution, rel_tol: f64) -> f64 {
    let s = spectrum(d);
    let total: f64 = s.iter().map(|(_, p)| p).sum();
    s.iter()
        .filter(|(_, p)| *p > rel_tol * total)
        .map(|(w, _)| w.abs())
        .fold(0.0, f64::max)
}

/// Fraction of the total spectral power at `|ω| > cutoff`.
pub fn spectral_power_beyond(d: &Distribution, cutoff: f64) -> f64 {
    let s = spectrum(d);
    let total: f64 = s.iter().map(|(_, p)| p).sum();
    let beyond: f64 = s
        .iter()
        .filter(|(w, _)| w.abs() > cutoff * (1.0 + 1e-9))
        .map(|(_, p)| p)
        .sum();
    beyond / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeMetrics {
    /// `2π / ω_peak`.
    pub period: f64,
    /// `(max - min) / (max + min)` over the central half of the support.
    pub visibility: f64,
    /// Refined angular frequency of the dominant nonzero peak.
    pub frequency: f64,
}

const PAD: usize = 8;

fn parabola(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom.abs() > 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Period and visibility of the dominant fringe.
pub fn fringe_metrics(d: &Distribution) -> Result<FringeMetrics> {
    let f = folded(d);
    let n = f.len();
    if n < 4 {
        return Err(Error::NoFringe);
    }
    let power = power_spectrum(&f, n);
    let half = n / 2;
    // walk down the DC lobe, then take the strongest remaining peak
    let mut start = 1;
    while start < half && power[start + 1] <= power[start] {
        start += 1;
    }
    let (peak, peak_power) = (start..=half)
        .map(|j| (j, power[j]))
        .fold((start, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    let mut floor: Vec<f64> = power[1..=half].to_vec();
    floor.sort_by(|a, b| a.total_cmp(b));
    let median = floor[floor.len() / 2];
    if !(peak_power > 5.0 * median && peak_power > 1e-9 * power[0]) {
        return Err(Error::NoFringe);
    }
    let frequency = if d.period_bins.is_some() {
        // folded spectra sit exactly on the momentum lattice: interpolate the coarse bins
        let (a, b, c) = (power[peak - 1], power[peak], power[(peak + 1) % n]);
        2.0 * PI * (peak as f64 + parabola(a, b, c)) / (n as f64 * d.spacing)
    } else {
        // refine on an 8x zero-padded spectrum with a parabola through the maximum
        let fine = power_spectrum(&f, n * PAD);
        let center = peak * PAD;
        let lo = center.saturating_sub(PAD).max(1);
        let hi = (center + PAD).min(n * PAD / 2 - 1);
        let i = (lo..=hi).fold(lo, |a, b| if fine[b] > fine[a] { b } else { a });
        let delta = parabola(fine[i - 1], fine[i], fine[i + 1]);
        2.0 * PI * (i as f64 + delta) / ((n * PAD) as f64 * d.spacing)
    };
    let lo = d.len() / 4;
    let hi = (3 * d.len() / 4).max(lo + 1);
    let window = &d.p[lo..hi];
    let max = window.iter().copied().fold(f64::MIN, f64::max);
    let min = window.iter().copied().fold(f64::MAX, f64::min);
    let visibility = if max + min > 0.0 { (max - min) / (max + min) } else { 0.0 };
    Ok(FringeMetrics {
        period: 2.0 * PI / frequency,
        visibility,
        frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(k: f64, spacing: f64, n: usize, period: Option<usize>) -> Distribution {
        let offset = -(n as f64 / 2.0) * spacing;
        let w = (0..n).map(|i| 1.0 + (k * (offset + i as f64 * spacing)).cos()).collect();
        Distribution::from_weights(spacing, offset, w, period).unwrap()
    }

    #[test]
    fn analytic_cosine_fringe() {
        let k0 = 1.3;
        // incommensurate frequency, no folding: relies on the interpolation
        let d = cosine(4.0 * k0, 0.05, 1000, None);
        let f = fringe_metrics(&d).unwrap();
        let expect = PI / (2.0 * k0);
        assert!((f.period / expect - 1.0).abs() < 0.005, "{} vs {expect}", f.period);
        assert!((f.visibility - 1.0).abs() < 0.01);
    }

    #[test]
    fn flat_has_no_fringe() {
        let d = Distribution::from_weights(0.1, 0.0, vec![1.0; 128], None).unwrap();
        assert!(matches!(fringe_metrics(&d), Err(Error::NoFringe)));
    }

    #[test]
    fn gaussian_has_no_fringe_and_narrow_support() {
        let w = (0..256).map(|i| (-((i as f64 - 128.0) * 0.1).powi(2) / 2.0).exp()).collect();
        let d = Distribution::from_weights(0.1, -12.8, w, None).unwrap();
        assert!(matches!(fringe_metrics(&d), Err(Error::NoFringe)));
        // spectrum exp(-ω²/2): below 1e-10 of the total beyond ω ≈ 7
        assert!(spectral_support(&d, 1e-10) < 8.0);
    }

    #[test]
    fn white_noise_reaches_nyquist() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w = (0..128).map(|_| rng.random::<f64>()).collect();
        let d = Distribution::from_weights(0.5, 0.0, w, None).unwrap();
        let nyq = PI / 0.5;
        assert!(spectral_support(&d, 1e-10) > 0.9 * nyq);
    }

    #[test]
    fn periodic_cosine_support_is_exact() {
        // 64 bins per period, frequency 5 cycles per period
        let s = 0.125;
        let k = 2.0 * PI * 5.0 / (64.0 * s);
        let d = cosine(k, s, 64 * 3 + 1, Some(64));
        let sup = spectral_support(&d, 1e-6);
        assert!((sup - k).abs() < 2.0 * PI / (64.0 * s));
        assert!(spectral_power_beyond(&d, k) < 1e-3);
        let f = fringe_metrics(&d).unwrap();
        assert!((f.frequency / k - 1.0).abs() < 1e-12);
    }
}
