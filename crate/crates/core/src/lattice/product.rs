use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::dft::{AxisDft, Direction};
use super::{Basis, Grid, WaveTensor};
use crate::error::{Error, Result};

/// Single-photon factor. Shared via `Arc` so identical factors can be detected
/// by pointer and reused by the low-rank kernels.
pub type Factor = Arc<[C64]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: C64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coef: C64, factors: Vec<Factor>) -> Self {
        Term { coef, factors }
    }

    /// Term whose `n` factors are all the same vector.
    pub fn repeated(coef: C64, factor: Factor, n: usize) -> Self {
        Term { coef, factors: vec![factor; n] }
    }
}

/// Low-rank state `Σ_r c_r Π_n u_{r,n}(x_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSum {
    grid: Grid,
    photons: usize,
    basis: Basis,
    terms: Vec<Term>,
}

/// `Σ conj(a) b`, without a measure.
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl ProductSum {
    pub fn new(grid: Grid, photons: usize, basis: Basis, terms: Vec<Term>) -> Result<Self> {
        if photons == 0 {
            return Err(Error::Mismatch("photon count must be >= 1".into()));
        }
        if terms.is_empty() {
            return Err(Error::Mismatch("a product sum needs at least one term".into()));
        }
        for (r, t) in terms.iter().enumerate() {
            if t.factors.len() != photons {
                return Err(Error::Mismatch(format!(
                    "term {r} has {} factors, expected {photons}",
                    t.factors.len()
                )));
            }
            if let Some(f) = t.factors.iter().find(|f| f.len() != grid.points()) {
                return Err(Error::Mismatch(format!(
                    "term {r} has a factor of length {}, expected {}",
                    f.len(),
                    grid.points()
                )));
            }
        }
        Ok(ProductSum { grid, photons, basis, terms })
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

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn spacing(&self) -> f64 {
        match self.basis {
            Basis::Position => self.grid.dx(),
            Basis::Momentum => self.grid.dk(),
        }
    }

    /// Gram matrix of the terms without coefficients: `G[r][s] = ⟨Π u_r | Π u_s⟩`.
    pub fn gram(&self) -> Vec<Vec<C64>> {
        let h = self.spacing();
        let r = self.terms.len();
        let mut g = vec![vec![C64::new(0.0, 0.0); r]; r];
        for a in 0..r {
            for b in a..r {
                let mut p = C64::new(1.0, 0.0);
                for (u, v) in self.terms[a].factors.iter().zip(&self.terms[b].factors) {
                    p *= dot(u, v) * h;
                }
                g[a][b] = p;
                g[b][a] = p.conj();
            }
        }
        g
    }

    pub fn norm_sq(&self) -> f64 {
        let g = self.gram();
        let mut s = C64::new(0.0, 0.0);
        for (a, ta) in self.terms.iter().enumerate() {
            for (b, tb) in self.terms.iter().enumerate() {
                s += ta.coef.conj() * tb.coef * g[a][b];
            }
        }
        s.re
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        for t in self.terms.iter_mut() {
            t.coef *= s;
        }
        Ok(self)
    }

    /// Applies `f` once per distinct factor, keeping shared factors shared.
    fn map_factors(mut self, mut f: impl FnMut(&[C64]) -> Vec<C64>) -> Self {
        let mut done: HashMap<*const C64, Factor> = HashMap::new();
        for t in self.terms.iter_mut() {
            for u in t.factors.iter_mut() {
                let key = u.as_ptr();
                let new = done.entry(key).or_insert_with(|| Arc::from(f(u)));
                *u = new.clone();
            }
        }
        self
    }

    pub fn change_basis(self) -> Self {
        let dir = match self.basis {
            Basis::Position => Direction::ToMomentum,
            Basis::Momentum => Direction::ToPosition,
        };
        let dft = AxisDft::new(&self.grid);
        let mut out = self.map_factors(|u| {
            let mut v = u.to_vec();
            dft.vector(&mut v, dir);
            v
        });
        out.basis = out.basis.other();
        out
    }

    pub fn into_basis(self, basis: Basis) -> Self {
        if self.basis == basis {
            self
        } else {
            self.change_basis()
        }
    }

    /// Factor-wise band projection. The band projector is a product of
    /// single-axis projectors, so projecting each factor is exact.
    pub fn bandlimit_project(self) -> Result<(Self, f64)> {
        let basis = self.basis;
        let before = self.norm_sq();
        if !(before > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let grid = self.grid;
        let p = self.into_basis(Basis::Momentum).map_factors(|u| {
            u.iter()
                .enumerate()
                .map(|(j, a)| if grid.in_band(j) { *a } else { C64::new(0.0, 0.0) })
                .collect()
        });
        let after = p.norm_sq();
        let discarded = (1.0 - after / before).max(0.0);
        Ok((p.normalize()?.into_basis(basis), discarded))
    }

    /// Largest out-of-band fraction over all distinct factors.
    pub fn max_factor_out_of_band(&self) -> f64 {
        let p = self.clone().into_basis(Basis::Momentum);
        let mut worst: f64 = 0.0;
        for t in &p.terms {
            for u in &t.factors {
                let total: f64 = u.iter().map(|a| a.norm_sqr()).sum();
                if total == 0.0 {
                    continue;
                }
                let out: f64 = u
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| !p.grid.in_band(*j))
                    .map(|(_, a)| a.norm_sqr())
                    .sum();
                worst = worst.max(out / total);
            }
        }
        worst
    }

    /// Shifts every photon by `d` (circular, see [`WaveTensor::translate`]).
    pub fn translate(self, d: f64) -> Self {
        if d == 0.0 {
            return self;
        }
        let basis = self.basis;
        let grid = self.grid;
        self.into_basis(Basis::Momentum)
            .map_factors(|u| {
                u.iter()
                    .enumerate()
                    .map(|(j, a)| a * C64::from_polar(1.0, -grid.momentum(j) * d))
                    .collect()
            })
            .into_basis(basis)
    }

    /// Expands into a dense tensor, subject to the grid's amplitude cap.
    pub fn densify(&self) -> Result<WaveTensor> {
        let m = self.grid.points();
        let n = self.photons;
        let len = self.grid.dense_len(n)?;
        let mut amp = vec![C64::new(0.0, 0.0); len];
        // Build each term as an outer product, one axis at a time.
        let mut buf = Vec::with_capacity(len);
        let mut next = Vec::with_capacity(len);
        for t in &self.terms {
            buf.clear();
            buf.push(t.coef);
            for u in &t.factors {
                next.clear();
                for a in &buf {
                    next.extend(u.iter().map(|b| a * b));
                }
                std::mem::swap(&mut buf, &mut next);
            }
            debug_assert_eq!(buf.len(), m.pow(n as u32));
            for (x, y) in amp.iter_mut().zip(&buf) {
                *x += y;
            }
        }
        WaveTensor::from_amplitudes(self.grid, n, self.basis, amp)
    }

    /// Position-basis copy whose factors are pre-scaled so that
    /// `Σ|Π u|²` needs no further measure (each factor carries `√dx`).
    pub(crate) fn position_unit_measure(&self) -> ProductSum {
        let s = self.grid.dx().sqrt();
        self.clone()
            .into_basis(Basis::Position)
            .map_factors(|u| u.iter().map(|a| a * s).collect())
    }
}
