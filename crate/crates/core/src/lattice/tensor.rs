use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::dft::{AxisDft, Direction};
use super::Grid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Position,
    Momentum,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::Position => Basis::Momentum,
            Basis::Momentum => Basis::Position,
        }
    }
}

/// Dense N-photon amplitude tensor on `grid`, row-major with photon 1 slowest.
///
/// Amplitudes are densities in the chosen basis, so a normalized state has
/// `Σ|amp|² · spacing^N = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTensor {
    grid: Grid,
    photons: usize,
    basis: Basis,
    amp: Vec<C64>,
}

impl WaveTensor {
    pub fn from_amplitudes(grid: Grid, photons: usize, basis: Basis, amp: Vec<C64>) -> Result<Self> {
        if photons == 0 {
            return Err(Error::Mismatch("photon count must be >= 1".into()));
        }
        let len = grid.dense_len(photons)?;
        if amp.len() != len {
            return Err(Error::Mismatch(format!(
                "{} amplitudes supplied for a {}^{} tensor",
                amp.len(),
                grid.points(),
                photons
            )));
        }
        Ok(WaveTensor { grid, photons, basis, amp })
    }

    pub fn zeros(grid: Grid, photons: usize, basis: Basis) -> Result<Self> {
        let len = grid.dense_len(photons)?;
        Self::from_amplitudes(grid, photons, basis, vec![C64::new(0.0, 0.0); len])
    }

    /// Fills the tensor from a function of the lattice index tuple.
    pub fn from_fn(
        grid: Grid,
        photons: usize,
        basis: Basis,
        mut f: impl FnMut(&[usize]) -> C64,
    ) -> Result<Self> {
        let mut t = Self::zeros(grid, photons, basis)?;
        let m = grid.points();
        let mut idx = vec![0usize; photons];
        for a in t.amp.iter_mut() {
            *a = f(&idx);
            increment(&mut idx, m);
        }
        Ok(t)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amp
    }

    /// Lattice spacing of the current basis.
    pub fn spacing(&self) -> f64 {
        match self.basis {
            Basis::Position => self.grid.dx(),
            Basis::Momentum => self.grid.dk(),
        }
    }

    /// Integration weight of one tensor cell, `spacing^N`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.photons as i32)
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let m = self.grid.points();
        idx.iter().fold(0, |acc, &i| acc * m + i)
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.amp[self.flat_index(idx)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.cell_measure()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        for a in self.amp.iter_mut() {
            *a *= s;
        }
        Ok(self)
    }

    fn check_compatible(&self, other: &WaveTensor) -> Result<()> {
        if self.photons != other.photons || !self.grid.same_lattice(&other.grid) {
            return Err(Error::Mismatch(format!(
                "cannot combine N={} and N={} states on different or mismatched grids",
                self.photons, other.photons
            )));
        }
        Ok(())
    }

    /// `⟨self|other⟩` with the `spacing^N` measure.
    pub fn overlap(&self, other: &WaveTensor) -> Result<C64> {
        self.check_compatible(other)?;
        let other = if other.basis == self.basis {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.clone().change_basis())
        };
        let s: C64 = self.amp.iter().zip(other.amp.iter()).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.cell_measure())
    }

    /// Unitary N-dimensional DFT to the other basis.
    pub fn change_basis(mut self) -> Self {
        let dir = match self.basis {
            Basis::Position => Direction::ToMomentum,
            Basis::Momentum => Direction::ToPosition,
        };
        AxisDft::new(&self.grid).tensor(&mut self.amp, self.photons, dir);
        self.basis = self.basis.other();
        self
    }

    pub fn into_basis(self, basis: Basis) -> Self {
        if self.basis == basis {
            self
        } else {
            self.change_basis()
        }
    }

    /// Average over all `N!` photon-index permutations, then renormalize.
    pub fn symmetrize(self) -> Result<Self> {
        let n = self.photons;
        if n == 1 {
            return self.normalize();
        }
        let m = self.grid.points();
        let perms = permutations(n);
        let strides: Vec<usize> = (0..n).map(|a| m.pow((n - 1 - a) as u32)).collect();
        let mut out = vec![C64::new(0.0, 0.0); self.amp.len()];
        let mut idx = vec![0usize; n];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in &perms {
                let src: usize = p.iter().enumerate().map(|(a, &b)| idx[b] * strides[a]).sum();
                acc += self.amp[src];
            }
            *slot = acc;
            debug_assert_eq!(flat, self.flat_index(&idx));
            increment(&mut idx, m);
        }
        let inv = 1.0 / perms.len() as f64;
        for a in out.iter_mut() {
            *a *= inv;
        }
        WaveTensor { amp: out, ..self }.normalize()
    }

    /// Zeroes every momentum amplitude with some `|k_n| > k0` and renormalizes.
    ///
    /// Returns the state in its original basis and the discarded fraction of
    /// the input norm.
    pub fn bandlimit_project(self) -> Result<(Self, f64)> {
        let basis = self.basis;
        let mut t = self.into_basis(Basis::Momentum);
        let before = t.norm_sq();
        if !(before > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let m = t.grid.points();
        let in_band: Vec<bool> = (0..m).map(|j| t.grid.in_band(j)).collect();
        let mut idx = vec![0usize; t.photons];
        for a in t.amp.iter_mut() {
            if !idx.iter().all(|&i| in_band[i]) {
                *a = C64::new(0.0, 0.0);
            }
            increment(&mut idx, m);
        }
        let after = t.norm_sq();
        let discarded = (1.0 - after / before).max(0.0);
        let t = t.normalize()?.into_basis(basis);
        Ok((t, discarded))
    }

    /// Power outside the band, as a fraction of the total.
    pub fn out_of_band_power(&self) -> f64 {
        let t = self.clone().into_basis(Basis::Momentum);
        let m = t.grid.points();
        let in_band: Vec<bool> = (0..m).map(|j| t.grid.in_band(j)).collect();
        let mut idx = vec![0usize; t.photons];
        let (mut out, mut total) = (0.0, 0.0);
        for a in &t.amp {
            let p = a.norm_sqr();
            total += p;
            if !idx.iter().all(|&i| in_band[i]) {
                out += p;
            }
            increment(&mut idx, m);
        }
        if total > 0.0 {
            out / total
        } else {
            0.0
        }
    }

    /// Shifts every photon coordinate by `d` via the momentum phase `Π e^{-i k_n d}`.
    ///
    /// The shift is circular on the grid; states need several standard
    /// deviations of padding from the edges to avoid wraparound.
    pub fn translate(self, d: f64) -> Self {
        if d == 0.0 {
            return self;
        }
        let basis = self.basis;
        let mut t = self.into_basis(Basis::Momentum);
        let m = t.grid.points();
        let phase: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, -t.grid.momentum(j) * d)).collect();
        let mut idx = vec![0usize; t.photons];
        for a in t.amp.iter_mut() {
            let mut p = C64::new(1.0, 0.0);
            for &i in &idx {
                p *= phase[i];
            }
            *a *= p;
            increment(&mut idx, m);
        }
        t.into_basis(basis)
    }

    /// Position-basis probability mass `|ψ|² dx^N` per cell.
    pub fn position_pmf(&self) -> Vec<f64> {
        let t = if self.basis == Basis::Position {
            std::borrow::Cow::Borrowed(self)
        } else {
            std::borrow::Cow::Owned(self.clone().change_basis())
        };
        let w = t.cell_measure();
        t.amp.iter().map(|a| a.norm_sqr() * w).collect()
    }

    /// Largest deviation from exchange symmetry over adjacent transpositions.
    pub fn asymmetry(&self) -> f64 {
        let n = self.photons;
        let m = self.grid.points();
        let mut worst: f64 = 0.0;
        let mut idx = vec![0usize; n];
        for a in &self.amp {
            for s in 0..n.saturating_sub(1) {
                let mut j = idx.clone();
                j.swap(s, s + 1);
                worst = worst.max((a - self.get(&j)).norm());
            }
            increment(&mut idx, m);
        }
        worst
    }
}

/// Odometer increment of a base-`m` index tuple, last digit fastest.
pub(crate) fn increment(idx: &mut [usize], m: usize) {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < m {
            return;
        }
        *d = 0;
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap_permute(n, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(a.clone());
        return;
    }
    heap_permute(k - 1, a, out);
    for i in 0..k - 1 {
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
        heap_permute(k - 1, a, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn random_tensor(grid: Grid, n: usize, seed: u64) -> WaveTensor {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        WaveTensor::from_fn(grid, n, Basis::Position, |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
        .unwrap()
        .normalize()
        .unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let grid = Grid::new(16, 0.3, 0.2).unwrap();
        let w = random_tensor(grid, 3, 1);
        let back = w.clone().change_basis().change_basis();
        let worst = w
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn parseval() {
        let grid = Grid::new(32, 0.25, 0.3).unwrap();
        let w = random_tensor(grid, 2, 2);
        let k = w.clone().change_basis();
        assert!((k.norm_sq() - 1.0).abs() < 1e-12);
        assert!((w.overlap(&w).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_fourier_pair() {
        // φ(k) ∝ exp(-k²/4σ²)  <->  ψ(x) ∝ exp(-σ² x²), so |ψ|² has σ_x = 1/(2σ)
        let grid = Grid::new(128, 0.1, 0.5).unwrap();
        let sigma = 1.0;
        let phi = WaveTensor::from_fn(grid, 1, Basis::Momentum, |i| {
            let k = grid.momentum(i[0]);
            C64::new((-k * k / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap()
        .normalize()
        .unwrap();
        let psi = phi.change_basis();
        let norm = (2.0 * sigma * sigma / PI).powf(0.25);
        for j in 0..grid.points() {
            let x = grid.position(j);
            let expect = norm * (-sigma * sigma * x * x).exp();
            assert!((psi.amplitudes()[j] - C64::new(expect, 0.0)).norm() < 1e-10);
        }
        let pmf = psi.position_pmf();
        let var: f64 = (0..grid.points()).map(|j| grid.position(j).powi(2) * pmf[j]).sum();
        assert!((var.sqrt() - 1.0 / (2.0 * sigma)).abs() < 1e-10);
    }

    #[test]
    fn momentum_spike_is_plane_wave() {
        let grid = Grid::new(32, 0.25, 0.5).unwrap();
        let edge = (grid.band_edge() / grid.dk()).round() as usize + grid.points() / 2;
        let phi = WaveTensor::from_fn(grid, 1, Basis::Momentum, |i| {
            C64::new(if i[0] == edge { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap()
        .normalize()
        .unwrap();
        let psi = phi.change_basis();
        let m0 = psi.amplitudes()[0].norm();
        assert!(psi.amplitudes().iter().all(|a| (a.norm() - m0).abs() < 1e-12));
    }

    #[test]
    fn symmetrize_idempotent() {
        let grid = Grid::new(8, 0.5, 0.2).unwrap();
        let s = random_tensor(grid, 3, 3).symmetrize().unwrap();
        assert!(s.asymmetry() < 1e-12);
        let again = s.clone().symmetrize().unwrap();
        let worst = s
            .amplitudes()
            .iter()
            .zip(again.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_rejects_zero() {
        let grid = Grid::new(8, 0.5, 0.2).unwrap();
        let z = WaveTensor::zeros(grid, 2, Basis::Position).unwrap();
        assert!(matches!(z.normalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn overlap_rejects_mismatch() {
        let grid = Grid::new(8, 0.5, 0.2).unwrap();
        let a = random_tensor(grid, 2, 4);
        let b = random_tensor(grid, 1, 5);
        assert!(matches!(a.overlap(&b), Err(Error::Mismatch(_))));
    }

    #[test]
    fn band_projection_of_gaussian_tail() {
        // |φ|² has rms width σ; the band edge at 3σ (amplitude width Δk = k0/3)
        let grid = Grid::new(128, 0.1, 0.5).unwrap();
        let dk_amp = grid.k0() / 3.0;
        let phi = WaveTensor::from_fn(grid, 1, Basis::Momentum, |i| {
            let k = grid.momentum(i[0]);
            C64::new((-k * k / (2.0 * dk_amp * dk_amp)).exp(), 0.0)
        })
        .unwrap();
        let (proj, discarded) = phi.bandlimit_project().unwrap();
        // continuous tail erfc(3) = 2.209e-5; the first lattice point outside
        // the band sits at 3.44 rather than k0 = 3.14, so the grid sum is smaller
        let tail: f64 = (0..grid.points())
            .map(|j| grid.momentum(j))
            .filter(|k| k.abs() > grid.k0())
            .map(|k| (-k * k / (dk_amp * dk_amp)).exp())
            .sum();
        let total: f64 = (0..grid.points()).map(|j| (-(grid.momentum(j) / dk_amp).powi(2)).exp()).sum();
        assert!(discarded <= 1e-4, "{discarded}");
        assert!(discarded < 2.209e-5);
        assert!((discarded - tail / total).abs() < 1e-15);
        assert!(proj.out_of_band_power() < 1e-30);
    }

    #[test]
    fn translate_round_trip_and_identity() {
        let grid = Grid::new(16, 0.25, 0.4).unwrap();
        let w = random_tensor(grid, 2, 6);
        let same = w.clone().translate(0.0);
        assert_eq!(same, w);
        let back = w.clone().translate(0.37).translate(-0.37);
        let worst = w
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }

    #[test]
    fn translate_keeps_momentum_density() {
        let grid = Grid::new(16, 0.25, 0.4).unwrap();
        let w = random_tensor(grid, 2, 7);
        let a = w.clone().change_basis();
        let b = w.translate(0.61).change_basis();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-12);
        }
    }
}
