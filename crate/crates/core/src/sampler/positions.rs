//! Exact samplers for the joint position pmf `|ψ(x_1..x_N)|² dx^N`.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{dot, Basis, ProductSum, WaveTensor};
use crate::states::State;

/// Product sums whose dense form has at most this many cells are sampled
/// through the dense table, which is much faster per draw.
pub const DENSE_TABLE_LIMIT: usize = 1 << 20;

fn cdf_of(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let total = *cdf.last().unwrap();
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)
}

/// Inverse-CDF sampling over the whole `M^N` table.
#[derive(Debug, Clone)]
pub struct DenseSampler {
    m: usize,
    n: usize,
    cdf: Vec<f64>,
}

impl DenseSampler {
    pub fn new(t: &WaveTensor) -> Result<Self> {
        let t = t.clone().into_basis(Basis::Position);
        let cdf = cdf_of(t.amplitudes().iter().map(|a| a.norm_sqr()));
        if !(*cdf.last().unwrap() > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(DenseSampler { m: t.grid().points(), n: t.photons(), cdf })
    }

    pub fn sample(&self, rng: &mut impl Rng, out: &mut Vec<usize>) {
        let mut flat = draw(&self.cdf, rng);
        out.clear();
        out.resize(self.n, 0);
        for slot in out.iter_mut().rev() {
            *slot = flat % self.m;
            flat /= self.m;
        }
    }
}

/// Sequential sampler for `Σ_r c_r Π_n u_{r,n}(x_n)` that never densifies.
///
/// Photon `j` is drawn from
/// `v(x) = Re Σ_{r,s} a_r conj(a_s) T_j[r][s] u_{r,j}(x) conj(u_{s,j}(x))`,
/// where `a_r = c_r Π_{n<j} u_{r,n}(x_n)` carries the already drawn
/// coordinates and `T_j[r][s] = Π_{n>j} ⟨u_{s,n}|u_{r,n}⟩` integrates out the
/// rest. Cost is `O(R² M)` per coordinate.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    m: usize,
    n: usize,
    coefs: Vec<C64>,
    /// `factors[r][n]`, position basis, scaled by `√dx`.
    factors: Vec<Vec<std::sync::Arc<[C64]>>>,
    /// `suffix[j][r * R + s]`.
    suffix: Vec<Vec<C64>>,
    /// Per-factor CDFs when the state is a single product.
    single: Option<Vec<std::sync::Arc<Vec<f64>>>>,
}

impl ChainSampler {
    pub fn new(p: &ProductSum) -> Result<Self> {
        let q = p.position_unit_measure();
        let m = q.grid().points();
        let n = q.photons();
        let rank = q.rank();
        let coefs: Vec<C64> = q.terms().iter().map(|t| t.coef).collect();
        let factors: Vec<Vec<_>> = q.terms().iter().map(|t| t.factors.clone()).collect();
        let mut suffix = vec![vec![C64::new(1.0, 0.0); rank * rank]; n];
        for j in (0..n.saturating_sub(1)).rev() {
            for r in 0..rank {
                for s in 0..rank {
                    let g = dot(&factors[s][j + 1], &factors[r][j + 1]);
                    suffix[j][r * rank + s] = suffix[j + 1][r * rank + s] * g;
                }
            }
        }
        let single = if rank == 1 {
            let mut cache: HashMap<*const C64, std::sync::Arc<Vec<f64>>> = HashMap::new();
            let cdfs = factors[0]
                .iter()
                .map(|u| {
                    cache
                        .entry(u.as_ptr())
                        .or_insert_with(|| std::sync::Arc::new(cdf_of(u.iter().map(|a| a.norm_sqr()))))
                        .clone()
                })
                .collect();
            Some(cdfs)
        } else {
            None
        };
        Ok(ChainSampler { m, n, coefs, factors, suffix, single })
    }

    /// Unnormalized conditional weights of photon `j = prefix.len()` given
    /// the coordinates already drawn.
    fn weights(&self, amps: &[C64], j: usize, out: &mut [f64]) {
        let rank = self.coefs.len();
        out.iter_mut().for_each(|w| *w = 0.0);
        for r in 0..rank {
            for s in r..rank {
                let mut c = amps[r] * amps[s].conj() * self.suffix[j][r * rank + s];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                if r != s {
                    c *= 2.0;
                }
                let (ur, us) = (&self.factors[r][j], &self.factors[s][j]);
                for ((w, a), b) in out.iter_mut().zip(ur.iter()).zip(us.iter()) {
                    *w += (c * a * b.conj()).re;
                }
            }
        }
    }

    fn clip(&self, w: &mut [f64]) -> Result<()> {
        let total: f64 = w.iter().map(|v| v.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        for (i, v) in w.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -1e-12 * total {
                    return Err(Error::NegativeMass { coordinate: i, mass: *v / total });
                }
                *v = 0.0;
            }
        }
        Ok(())
    }

    fn advance(&self, amps: &mut [C64], j: usize, x: usize) {
        for (r, a) in amps.iter_mut().enumerate() {
            *a *= self.factors[r][j][x];
        }
        // rescale to keep long products away from underflow
        let peak = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if peak > 0.0 {
            for a in amps.iter_mut() {
                *a /= peak;
            }
        }
    }

    /// Normalized pmf of the next coordinate given `prefix`.
    pub fn conditional_pmf(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        let mut amps = self.coefs.clone();
        for (j, &x) in prefix.iter().enumerate() {
            self.advance(&mut amps, j, x);
        }
        let mut w = vec![0.0; self.m];
        self.weights(&amps, prefix.len(), &mut w);
        self.clip(&mut w)?;
        let total: f64 = w.iter().sum();
        Ok(w.iter().map(|v| v / total).collect())
    }

    pub fn sample(&self, rng: &mut impl Rng, out: &mut Vec<usize>) -> Result<()> {
        out.clear();
        if let Some(cdfs) = &self.single {
            out.extend(cdfs.iter().map(|c| draw(c, rng)));
            return Ok(());
        }
        let mut amps = self.coefs.clone();
        let mut w = vec![0.0; self.m];
        let mut cdf = vec![0.0; self.m];
        for j in 0..self.n {
            self.weights(&amps, j, &mut w);
            self.clip(&mut w)?;
            let mut acc = 0.0;
            for (c, v) in cdf.iter_mut().zip(&w) {
                acc += v;
                *c = acc;
            }
            let x = draw(&cdf, rng);
            out.push(x);
            self.advance(&mut amps, j, x);
        }
        Ok(())
    }
}

/// Position sampler for any fixed-number state.
#[derive(Debug, Clone)]
pub enum PositionSampler {
    Dense(DenseSampler),
    Chain(ChainSampler),
}

impl PositionSampler {
    /// Dense table for dense states and small product sums, chain rule
    /// otherwise.
    pub fn new(state: &State) -> Result<Self> {
        match state {
            State::Dense(t) => Ok(PositionSampler::Dense(DenseSampler::new(t)?)),
            State::LowRank(p) => {
                let cells = (p.grid().points() as u128).checked_pow(p.photons() as u32);
                match cells {
                    Some(c) if c <= DENSE_TABLE_LIMIT as u128 && p.rank() > 1 => {
                        Ok(PositionSampler::Dense(DenseSampler::new(&p.densify()?)?))
                    }
                    _ => Ok(PositionSampler::Chain(ChainSampler::new(p)?)),
                }
            }
        }
    }

    pub fn chain(p: &ProductSum) -> Result<Self> {
        Ok(PositionSampler::Chain(ChainSampler::new(p)?))
    }

    /// Draws lattice indices for all photons into `out`.
    pub fn sample(&self, rng: &mut impl Rng, out: &mut Vec<usize>) -> Result<()> {
        match self {
            PositionSampler::Dense(d) => {
                d.sample(rng, out);
                Ok(())
            }
            PositionSampler::Chain(c) => c.sample(rng, out),
        }
    }
}

/// Convenience wrapper: one draw from `state` with `rng`.
pub fn sample_positions(sampler: &PositionSampler, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    sampler.sample(rng, &mut out)?;
    Ok(out)
}
