//! Centered unitary DFT matching `A(x) = (2π)^{-1/2} ∫ dk a(k) e^{ikx}`.
//!
//! With index `j` at `(j - M/2) dx` and `l` at `(l - M/2) dk`,
//!
//! ```text
//! ψ(x_j) = dk/√(2π) Σ_l φ(k_l) e^{i k_l x_j}
//! φ(k_l) = dx/√(2π) Σ_j ψ(x_j) e^{-i k_l x_j}
//! ```
//!
//! Amplitudes are densities: `Σ|ψ|² dx = Σ|φ|² dk`. The centered phases factor
//! into `(-1)^j (-1)^l e^{±iπM/2}`, so each axis is one plain FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    ToMomentum,
    ToPosition,
}

pub(crate) struct AxisDft {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    to_momentum: C64,
    to_position: C64,
}

impl AxisDft {
    pub fn new(grid: &Grid) -> Self {
        let m = grid.points();
        let mut planner = FftPlanner::new();
        // e^{iπM/2} = i^M
        let half_turns = match m % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        let norm = (2.0 * PI).sqrt();
        AxisDft {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            to_momentum: half_turns.conj() * (grid.dx() / norm),
            to_position: half_turns * (grid.dk() / norm),
        }
    }

    fn plan(&self, dir: Direction) -> (&Arc<dyn Fft<f64>>, C64) {
        match dir {
            Direction::ToMomentum => (&self.forward, self.to_momentum),
            Direction::ToPosition => (&self.inverse, self.to_position),
        }
    }

    /// Transforms one single-photon vector in place.
    pub fn vector(&self, v: &mut [C64], dir: Direction) {
        debug_assert_eq!(v.len(), self.m);
        let (fft, scale) = self.plan(dir);
        alternate(v);
        fft.process(v);
        alternate(v);
        for a in v.iter_mut() {
            *a *= scale;
        }
    }

    /// Transforms every axis of a row-major `M^n` tensor in place.
    pub fn tensor(&self, amp: &mut [C64], n: usize, dir: Direction) {
        let m = self.m;
        debug_assert_eq!(amp.len(), m.pow(n as u32));
        let (fft, scale) = self.plan(dir);
        let total_scale = scale.powu(n as u32);
        let mut line = vec![C64::new(0.0, 0.0); m];
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..n {
            let stride = m.pow((n - 1 - axis) as u32);
            if stride == 1 {
                for chunk in amp.chunks_exact_mut(m) {
                    alternate(chunk);
                    fft.process_with_scratch(chunk, &mut scratch);
                    alternate(chunk);
                }
                continue;
            }
            let block = m * stride;
            for outer in (0..amp.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = amp[base + j * stride];
                    }
                    alternate(&mut line);
                    fft.process_with_scratch(&mut line, &mut scratch);
                    alternate(&mut line);
                    for (j, v) in line.iter().enumerate() {
                        amp[base + j * stride] = *v;
                    }
                }
            }
        }
        for a in amp.iter_mut() {
            *a *= total_scale;
        }
    }
}

fn alternate(v: &mut [C64]) {
    for a in v.iter_mut().skip(1).step_by(2) {
        *a = -*a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(grid: &Grid, v: &[C64], dir: Direction) -> Vec<C64> {
        let m = grid.points();
        (0..m)
            .map(|out| {
                let mut acc = C64::new(0.0, 0.0);
                for (inp, a) in v.iter().enumerate() {
                    let (x, k, sign, w) = match dir {
                        Direction::ToMomentum => (grid.position(inp), grid.momentum(out), -1.0, grid.dx()),
                        Direction::ToPosition => (grid.position(out), grid.momentum(inp), 1.0, grid.dk()),
                    };
                    acc += a * C64::from_polar(w / (2.0 * PI).sqrt(), sign * k * x);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        for &m in &[2usize, 4, 8, 16] {
            let grid = Grid::new(m, 0.3, 0.1).unwrap();
            let dft = AxisDft::new(&grid);
            let v: Vec<C64> = (0..m).map(|j| C64::new((j as f64).sin(), (j as f64 * 0.7).cos())).collect();
            for dir in [Direction::ToMomentum, Direction::ToPosition] {
                let mut fast = v.clone();
                dft.vector(&mut fast, dir);
                let slow = naive(&grid, &v, dir);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).norm() < 1e-12, "m={m} {dir:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn tensor_axes_agree_with_vector_transform() {
        let grid = Grid::new(8, 0.5, 0.2).unwrap();
        let dft = AxisDft::new(&grid);
        // separable tensor u ⊗ v transforms factor-wise
        let u: Vec<C64> = (0..8).map(|j| C64::new(j as f64, 1.0)).collect();
        let v: Vec<C64> = (0..8).map(|j| C64::new(1.0, -(j as f64) * 0.5)).collect();
        let mut t: Vec<C64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        dft.tensor(&mut t, 2, Direction::ToMomentum);
        let (mut uu, mut vv) = (u.clone(), v.clone());
        dft.vector(&mut uu, Direction::ToMomentum);
        dft.vector(&mut vv, Direction::ToMomentum);
        for i in 0..8 {
            for j in 0..8 {
                assert!((t[i * 8 + j] - uu[i] * vv[j]).norm() < 1e-12);
            }
        }
    }
}
