use rand::Rng;
use rand_distr::{Distribution as _, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Grid;

/// Pixelated photon-counting array in the image plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    /// Grid points per pixel; the pixel size is `pixel_factor * dx`.
    #[serde(default = "one")]
    pub pixel_factor: usize,
    /// Per-photon detection probability.
    #[serde(default = "unit")]
    pub eta: f64,
    #[serde(default = "yes")]
    pub number_resolving: bool,
    /// Whether saturated events from binary pixels still contribute.
    #[serde(default = "yes")]
    pub keep_saturated: bool,
    /// Mean dark counts per pixel per trial.
    #[serde(default)]
    pub dark_rate: f64,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { pixel_factor: 1, eta: 1.0, number_resolving: true, keep_saturated: true, dark_rate: 0.0 }
    }
}

impl DetectorModel {
    pub fn with_eta(eta: f64) -> Self {
        DetectorModel { eta, ..Default::default() }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.pixel_factor == 0 || grid.points() % self.pixel_factor != 0 {
            return Err(Error::pre(format!(
                "pixel_factor {} must divide the grid size {}",
                self.pixel_factor,
                grid.points()
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::pre(format!("eta = {} outside (0, 1]", self.eta)));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::pre(format!("dark_rate = {} must be finite and non-negative", self.dark_rate)));
        }
        Ok(())
    }

    /// Non-fatal remarks about this detector on `grid`.
    pub fn warnings(&self, grid: &Grid) -> Vec<String> {
        let mut w = Vec::new();
        let pitch = self.pixel_factor as f64 * grid.dx();
        let fringe_scale = 1.0 / (2.0 * grid.sin_theta());
        if pitch > 0.25 * fringe_scale {
            w.push(format!(
                "pixel size {pitch} exceeds a quarter of the single-photon fringe scale {fringe_scale}"
            ));
        }
        if self.dark_rate > 0.0 {
            w.push(format!("dark counts enabled at {} per pixel per trial", self.dark_rate));
        }
        w
    }

    pub fn geometry(&self, grid: &Grid) -> PixelGeometry {
        let q = self.pixel_factor;
        PixelGeometry {
            pixels: grid.points() / q,
            pitch: q as f64 * grid.dx(),
            offset: grid.position(0) + 0.5 * (q as f64 - 1.0) * grid.dx(),
        }
    }
}

/// Pixel `i` is centered at `offset + i * pitch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelGeometry {
    pub pixels: usize,
    pub pitch: f64,
    pub offset: f64,
}

impl PixelGeometry {
    pub fn center(&self, pixel: f64) -> f64 {
        self.offset + pixel * self.pitch
    }
}

/// Pixel counts of one trial, sorted by pixel index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub hits: Vec<(usize, u32)>,
    /// A binary pixel was hit by more than one photon.
    pub saturated: bool,
}

impl EventRecord {
    pub fn m(&self) -> u32 {
        self.hits.iter().map(|h| h.1).sum()
    }

    /// `Σ count * pixel`, the exact numerator of the centroid in pixel units.
    pub fn pixel_sum(&self) -> u64 {
        self.hits.iter().map(|&(p, c)| p as u64 * c as u64).sum()
    }

    fn add(&mut self, pixel: usize) {
        match self.hits.binary_search_by_key(&pixel, |h| h.0) {
            Ok(i) => self.hits[i].1 += 1,
            Err(i) => self.hits.insert(i, (pixel, 1)),
        }
    }
}

/// Bernoulli(eta) thinning, pixel binning, optional dark counts and
/// saturation of binary pixels.
pub fn detect(positions: &[usize], det: &DetectorModel, geometry: &PixelGeometry, rng: &mut impl Rng) -> EventRecord {
    let mut e = EventRecord::default();
    for &x in positions {
        if det.eta < 1.0 && rng.random::<f64>() >= det.eta {
            continue;
        }
        e.add(x / det.pixel_factor);
    }
    if det.dark_rate > 0.0 {
        let mean = det.dark_rate * geometry.pixels as f64;
        let dark = Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0);
        for _ in 0..dark {
            e.add(rng.random_range(0..geometry.pixels));
        }
    }
    if !det.number_resolving {
        for h in e.hits.iter_mut() {
            if h.1 > 1 {
                h.1 = 1;
                e.saturated = true;
            }
        }
    }
    e
}

/// Intensity centroid of an event from pixel centers; `None` when nothing
/// was detected.
pub fn centroid_of_event(e: &EventRecord, geometry: &PixelGeometry) -> Option<f64> {
    let m = e.m();
    if m == 0 {
        return None;
    }
    Some(geometry.center(e.pixel_sum() as f64 / m as f64))
}
