use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on dense tensor size, in complex amplitudes (256 MiB of `Complex64`).
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 24;

/// Discretized transverse axis.
///
/// Lengths are in units of the optical wavelength (λ = 1). Both the position
/// and the momentum lattices are centered: index `j` maps to
/// `(j - M/2) * dx` and `(j - M/2) * dk` respectively, with `dk = 2π / (M dx)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Grid {
    points: usize,
    dx: f64,
    sin_theta: f64,
    k0: f64,
    amplitude_cap: usize,
}

impl Grid {
    /// Builds a grid with band limit `k0 = 2π sinθ`.
    pub fn new(points: usize, dx: f64, sin_theta: f64) -> Result<Self> {
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count {points} must be a power of two >= 2"
            )));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing dx = {dx} must be positive")));
        }
        if !(sin_theta > 0.0 && sin_theta <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "numerical aperture sin_theta = {sin_theta} must lie in (0, 1]"
            )));
        }
        let k0 = 2.0 * PI * sin_theta;
        let nyquist = PI / dx;
        if k0 > nyquist * (1.0 + 1e-12) {
            return Err(Error::Nyquist { k0, nyquist });
        }
        Ok(Grid {
            points,
            dx,
            sin_theta,
            k0,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
        })
    }

    /// Rebuilds a grid from a stored band limit, keeping `k0` bit-exact.
    pub(crate) fn from_band_limit(points: usize, dx: f64, k0: f64) -> Result<Self> {
        let mut g = Grid::new(points, dx, k0 / (2.0 * PI))?;
        g.k0 = k0;
        Ok(g)
    }

    pub fn with_amplitude_cap(mut self, cap: usize) -> Self {
        self.amplitude_cap = cap;
        self
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_theta
    }

    /// Band limit on every photon's transverse momentum.
    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.extent()
    }

    pub fn extent(&self) -> f64 {
        self.points as f64 * self.dx
    }

    pub fn amplitude_cap(&self) -> usize {
        self.amplitude_cap
    }

    pub fn position(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.dx
    }

    pub fn momentum(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.dk()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.position(j)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.momentum(j)).collect()
    }

    /// Whether lattice momentum index `j` lies inside the band `|k| <= k0`.
    pub fn in_band(&self, j: usize) -> bool {
        self.momentum(j).abs() <= self.k0 * (1.0 + 1e-12)
    }

    /// Largest lattice momentum not exceeding `k0`.
    pub fn band_edge(&self) -> f64 {
        (self.k0 / self.dk() * (1.0 + 1e-12)).floor() * self.dk()
    }

    /// `M^n` as an amplitude count, or a cap error.
    pub fn dense_len(&self, n: usize) -> Result<usize> {
        let requested = (self.points as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if requested > self.amplitude_cap as u128 {
            return Err(Error::MemoryCap {
                requested,
                cap: self.amplitude_cap,
            });
        }
        Ok(requested as usize)
    }

    /// Same axis and band, ignoring the memory cap.
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.points == other.points && self.dx == other.dx && self.k0 == other.k0
    }
}

/// `sin_theta` is derived from `k0` and not compared.
impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_lattice(other) && self.amplitude_cap == other.amplitude_cap
    }
}
