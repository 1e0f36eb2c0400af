//! Exact conditional and marginal centroid distributions and M-photon
//! absorption patterns.
//!
//! With positions `x_j = (j - M/2) dx`, the centroid of index tuple `j_1..j_N`
//! is `X = (S/N - M/2) dx` with `S = Σ j_n`, so marginal distributions live on
//! the lattice of spacing `dx/N` with `N(M-1)+1` bins and no binning error.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::Distribution;
use crate::error::{Error, Result};
use crate::lattice::{dot, Basis, Grid, ProductSum, WaveTensor};
use crate::states::{PhotonSuperposition, State};

/// Distribution on the original position grid.
fn on_grid(grid: &Grid, w: Vec<f64>) -> Result<Distribution> {
    let m = grid.points();
    Distribution::from_weights(grid.dx(), grid.position(0), w, Some(m))
}

/// Distribution on the `dx/N` centroid lattice indexed by `S`.
fn on_centroid_lattice(grid: &Grid, n: usize, w: Vec<f64>) -> Result<Distribution> {
    debug_assert_eq!(w.len(), n * (grid.points() - 1) + 1);
    Distribution::from_weights(grid.dx() / n as f64, grid.position(0), w, Some(grid.points()))
}

/// `p_c(x) ∝ |ψ(x, …, x)|²` on the original grid.
pub fn conditional_centroid(t: &WaveTensor) -> Result<Distribution> {
    let t = t.clone().into_basis(Basis::Position);
    let m = t.grid().points();
    let n = t.photons();
    let stride: usize = (0..n).map(|a| m.pow(a as u32)).sum();
    let diag: Vec<f64> = (0..m).map(|j| t.amplitudes()[j * stride].norm_sqr()).collect();
    let peak = t.amplitudes().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    if !(dmax > 1e-24 * peak) {
        return Err(Error::ZeroDiagonal);
    }
    on_grid(t.grid(), diag)
}

/// Conditional distribution of a fixed-number state in either representation.
pub fn conditional_centroid_of(state: &State) -> Result<Distribution> {
    match state {
        State::Dense(t) => conditional_centroid(t),
        State::LowRank(p) => {
            let a = absorption_low_rank(p, p.photons());
            if a.iter().copied().fold(0.0, f64::max) <= 0.0 {
                return Err(Error::ZeroDiagonal);
            }
            on_grid(p.grid(), a)
        }
    }
}

/// Marginal centroid distribution by exact accumulation over all `M^N` cells.
///
/// Work is split by the leading index; partial histograms are reduced in
/// index order, so the result does not depend on the thread count.
pub fn marginal_dense(t: &WaveTensor) -> Result<Distribution> {
    let t = t.clone().into_basis(Basis::Position);
    let grid = *t.grid();
    let m = grid.points();
    let n = t.photons();
    let bins = n * (m - 1) + 1;
    if n == 1 {
        return on_centroid_lattice(&grid, 1, t.amplitudes().iter().map(|a| a.norm_sqr()).collect());
    }
    let block = m.pow((n - 1) as u32);
    let amp = t.amplitudes();
    let partial: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|lead| {
            let rest = n - 1;
            let mut hist = vec![0.0; (m - 1) * rest + 1];
            let chunk = &amp[lead * block..(lead + 1) * block];
            // odometer over all but the last remaining digit, with a running digit sum
            let mut idx = vec![0usize; rest - 1];
            let mut s = 0usize;
            for row in chunk.chunks_exact(m) {
                for (j, a) in row.iter().enumerate() {
                    hist[s + j] += a.norm_sqr();
                }
                for d in idx.iter_mut().rev() {
                    *d += 1;
                    s += 1;
                    if *d < m {
                        break;
                    }
                    s -= m;
                    *d = 0;
                }
            }
            hist
        })
        .collect();
    let mut w = vec![0.0; bins];
    for (lead, hist) in partial.iter().enumerate() {
        for (s, v) in hist.iter().enumerate() {
            w[lead + s] += v;
        }
    }
    on_centroid_lattice(&grid, n, w)
}

/// Marginal centroid distribution of a product sum without densifying.
///
/// `p(S) = Σ_{r,s} c_r c_s* (w_{rs,1} * … * w_{rs,N})(S)` with
/// `w_{rs,n} = u_{r,n} ⊙ conj(u_{s,n}) dx`, the convolutions taken as
/// products of FFTs. Repeated factor pairs are raised to a power instead of
/// transformed again.
pub fn marginal_low_rank(p: &ProductSum) -> Result<Distribution> {
    let q = p.position_unit_measure();
    let grid = *q.grid();
    let m = grid.points();
    let n = q.photons();
    let bins = n * (m - 1) + 1;
    let len = bins.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let terms = q.terms();
    let mut acc = vec![C64::new(0.0, 0.0); len];
    let mut spectra: HashMap<(*const C64, *const C64), Vec<C64>> = HashMap::new();
    for (r, tr) in terms.iter().enumerate() {
        for (s, ts) in terms.iter().enumerate().skip(r) {
            // group identical factor pairs
            let mut groups: Vec<((*const C64, *const C64), u32, usize)> = Vec::new();
            for k in 0..n {
                let key = (tr.factors[k].as_ptr(), ts.factors[k].as_ptr());
                match groups.iter_mut().find(|g| g.0 == key) {
                    Some(g) => g.1 += 1,
                    None => groups.push((key, 1, k)),
                }
            }
            let mut prod = vec![C64::new(1.0, 0.0); len];
            for (key, count, k) in groups {
                let spec = spectra.entry(key).or_insert_with(|| {
                    let mut v = vec![C64::new(0.0, 0.0); len];
                    for (j, (a, b)) in tr.factors[k].iter().zip(ts.factors[k].iter()).enumerate() {
                        v[j] = a * b.conj();
                    }
                    fwd.process(&mut v);
                    v
                });
                for (x, y) in prod.iter_mut().zip(spec.iter()) {
                    *x *= y.powu(count);
                }
            }
            // the (s, r) term is the complex conjugate of (r, s) in position
            // space, so only the real part of twice the (r, s) term is needed
            let weight = tr.coef * ts.coef.conj() * if r == s { 1.0 } else { 2.0 };
            for (x, y) in acc.iter_mut().zip(&prod) {
                *x += weight * y;
            }
        }
    }
    inv.process(&mut acc);
    let scale = 1.0 / len as f64;
    let w: Vec<f64> = acc[..bins].iter().map(|v| (v.re * scale).max(0.0)).collect();
    on_centroid_lattice(&grid, n, w)
}

/// Marginal centroid distribution of a fixed-number state.
pub fn marginal_centroid(state: &State) -> Result<Distribution> {
    match state {
        State::Dense(t) => marginal_dense(t),
        State::LowRank(p) => marginal_low_rank(p),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Post-selected marginal centroid distribution of a photon-number
/// superposition: the `|C_N|²`-weighted mixture over `N ≥ 1`, renormalized by
/// `1 - |C_0|²`, on the common lattice `dx / lcm(N)`.
pub fn marginal_superposition(sup: &PhotonSuperposition) -> Result<Distribution> {
    let comps: Vec<_> = sup.components().iter().filter(|(c, _)| c.norm_sqr() > 0.0).collect();
    if comps.is_empty() {
        return Err(Error::NothingToPostSelect);
    }
    if comps.len() == 1 {
        return marginal_centroid(&comps[0].1);
    }
    let grid = *comps[0].1.grid();
    let m = grid.points();
    let l = comps.iter().fold(1, |acc, (_, s)| lcm(acc, s.photons()));
    let bins = l * (m - 1) + 1;
    let mut w = vec![0.0; bins];
    let mut period = 1;
    for (c, s) in &comps {
        let d = marginal_centroid(s)?;
        let step = l / s.photons();
        period = lcm(period, m * step);
        for (i, p) in d.p.iter().enumerate() {
            w[i * step] += c.norm_sqr() * p;
        }
    }
    let post = 1.0 - sup.vacuum_probability();
    for v in w.iter_mut() {
        *v /= post;
    }
    Distribution::from_weights(grid.dx() / l as f64, grid.position(0), w, Some(period))
}

/// Unnormalized `∫ dx_{m+1..N} |ψ(x, …, x, x_{m+1}, …)|²` on the grid (dense).
fn absorption_dense(t: &WaveTensor, order: usize) -> Vec<f64> {
    let t = t.clone().into_basis(Basis::Position);
    let m = t.grid().points();
    let n = t.photons();
    let block = m.pow((n - order) as u32);
    let stride: usize = (0..order).map(|a| m.pow((n - 1 - a) as u32)).sum();
    let w = t.grid().dx().powi((n - order) as i32);
    (0..m)
        .map(|j| {
            let start = j * stride;
            t.amplitudes()[start..start + block].iter().map(|a| a.norm_sqr()).sum::<f64>() * w
        })
        .collect()
}

/// Low-rank counterpart of [`absorption_dense`]:
/// `Σ_{r,s} c_r c_s* Π_{n≤m} u_{r,n}(x) conj(u_{s,n}(x)) Π_{n>m} ⟨u_{s,n}|u_{r,n}⟩ dx`.
fn absorption_low_rank(p: &ProductSum, order: usize) -> Vec<f64> {
    let q = p.clone().into_basis(Basis::Position);
    let m = q.grid().points();
    let dx = q.grid().dx();
    let terms = q.terms();
    let mut out = vec![0.0; m];
    for tr in terms {
        for ts in terms {
            let mut tail = tr.coef * ts.coef.conj();
            for k in order..q.photons() {
                tail *= dot(&ts.factors[k], &tr.factors[k]) * dx;
            }
            if tail == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let mut v = tail;
                for k in 0..order {
                    v *= tr.factors[k][j] * ts.factors[k][j].conj();
                }
                *o += v.re;
            }
        }
    }
    out.iter().map(|v| v.max(0.0)).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// M-photon absorption pattern
/// `Σ_{N≥M} C(N,M) |C_N|² ∫ |ψ_N(x,…,x, x_{M+1..N})|²`, normalized.
pub fn mphoton_absorption(sup: &PhotonSuperposition, order: usize) -> Result<Distribution> {
    if order == 0 {
        return Err(Error::pre("absorption order must be >= 1"));
    }
    let mut grid = None;
    let mut acc: Option<Vec<f64>> = None;
    for (c, s) in sup.components() {
        let n = s.photons();
        if n < order || c.norm_sqr() == 0.0 {
            continue;
        }
        let a = match s {
            State::Dense(t) => absorption_dense(t, order),
            State::LowRank(p) => absorption_low_rank(p, order),
        };
        let wgt = binomial(n, order) * c.norm_sqr();
        let acc = acc.get_or_insert_with(|| vec![0.0; a.len()]);
        for (x, y) in acc.iter_mut().zip(&a) {
            *x += wgt * y;
        }
        grid = Some(*s.grid());
    }
    match (acc, grid) {
        (Some(w), Some(g)) if w.iter().any(|v| *v > 0.0) => on_grid(&g, w),
        _ => Err(Error::IdenticallyZero(format!(
            "no component holds at least {order} photons"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::lattice::Term;
    use crate::measurement::{max_abs_deviation, total_variation};
    use crate::states::{default_noon_envelope, gaussian_beam, gaussian_profile, noon_state, GaussianBeamSpec};

    /// Brute-force marginal: loop over every index tuple.
    fn brute_marginal(t: &WaveTensor) -> Vec<f64> {
        let t = t.clone().into_basis(Basis::Position);
        let m = t.grid().points();
        let n = t.photons();
        let mut w = vec![0.0; n * (m - 1) + 1];
        let mut idx = vec![0usize; n];
        for a in t.amplitudes() {
            w[idx.iter().sum::<usize>()] += a.norm_sqr();
            crate::lattice::increment(&mut idx, m);
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    fn random_product(grid: Grid, n: usize, rank: usize, seed: u64) -> ProductSum {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = grid.points();
        let mut terms = Vec::new();
        let shared: Arc<[C64]> = (0..m).map(|_| C64::new(rng.random(), rng.random())).collect();
        for _ in 0..rank {
            let mut f = Vec::new();
            for k in 0..n {
                if k % 2 == 0 {
                    f.push(shared.clone());
                } else {
                    f.push((0..m).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random())).collect());
                }
            }
            terms.push(Term::new(C64::new(rng.random(), rng.random::<f64>() - 0.5), f));
        }
        ProductSum::new(grid, n, Basis::Position, terms).unwrap().normalize().unwrap()
    }

    #[test]
    fn dense_marginal_matches_brute_force() {
        let grid = Grid::new(8, 0.5, 0.3).unwrap();
        for n in 1..=4 {
            let t = random_product(grid, n, 2, n as u64).densify().unwrap();
            let d = marginal_dense(&t).unwrap();
            let b = brute_marginal(&t);
            assert_eq!(d.len(), n * 7 + 1);
            for (x, y) in d.p.iter().zip(&b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn low_rank_marginal_matches_dense() {
        let grid = Grid::new(16, 0.5, 0.3).unwrap();
        for (n, r) in [(1, 1), (2, 2), (3, 3), (3, 1)] {
            let p = random_product(grid, n, r, 10 + n as u64);
            let a = marginal_low_rank(&p).unwrap();
            let b = marginal_dense(&p.densify().unwrap()).unwrap();
            assert!(max_abs_deviation(&a, &b).unwrap() < 1e-12, "n={n} r={r}");
        }
    }

    #[test]
    fn single_photon_marginal_equals_conditional() {
        let grid = Grid::new(32, 0.25, 0.3).unwrap();
        let t = random_product(grid, 1, 2, 3).densify().unwrap();
        let a = marginal_dense(&t).unwrap();
        let b = conditional_centroid(&t).unwrap();
        assert!(max_abs_deviation(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn noon_two_photon_fringes() {
        let grid = Grid::new(32, 0.25, 0.25).unwrap();
        let p = noon_state(2, &grid, default_noon_envelope(&grid)).unwrap().state;
        let d = marginal_low_rank(&p).unwrap();
        let k0 = grid.k0();
        // plane-wave limit: |ψ|² ∝ 1 + cos(2 k0 (x1 + x2)), so p_m(S) is the
        // number of index pairs summing to S times 1 + cos(4 k0 X)
        let m = grid.points();
        let w: Vec<f64> = (0..d.len())
            .map(|i| (i + 1).min(2 * m - 1 - i) as f64 * (1.0 + (4.0 * k0 * d.support(i)).cos()))
            .collect();
        let oracle = Distribution::from_weights(d.spacing, d.offset, w, None).unwrap();
        assert!(max_abs_deviation(&d, &oracle).unwrap() < 1e-10);
        let c = conditional_centroid(&p.densify().unwrap()).unwrap();
        let wc: Vec<f64> = (0..c.len()).map(|i| 1.0 + (4.0 * k0 * c.support(i)).cos()).collect();
        let oc = Distribution::from_weights(c.spacing, c.offset, wc, None).unwrap();
        assert!(max_abs_deviation(&c, &oc).unwrap() < 1e-10);
    }

    #[test]
    fn classical_three_photons_is_self_convolution() {
        let grid = Grid::new(64, 0.25, 0.5).unwrap();
        let prof = gaussian_profile(&grid, 1.0, 0.0).unwrap().state;
        let p = crate::states::classical_product(3, &grid, &prof).unwrap();
        let d = marginal_low_rank(&p).unwrap();
        // oracle: direct triple convolution of |u|² dx
        let q: Vec<f64> = prof.iter().map(|a| a.norm_sqr() * grid.dx()).collect();
        let mut conv = q.clone();
        for _ in 1..3 {
            let mut next = vec![0.0; conv.len() + q.len() - 1];
            for (i, a) in conv.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            conv = next;
        }
        for (x, y) in d.p.iter().zip(&conv) {
            assert!((x - y).abs() < 1e-14);
        }
        let single = Distribution::from_weights(grid.dx(), grid.position(0), q, None).unwrap();
        assert!((d.variance() - single.variance() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn separable_beam_conditional_equals_restricted_marginal() {
        // a wide box keeps edge truncation below the tolerance
        let grid = Grid::new(64, 0.5, 0.5).unwrap();
        let spec = GaussianBeamSpec::new(2, grid.k0() / 10.0, 0.0).unwrap();
        let b = gaussian_beam(&spec, &grid).unwrap().state;
        let pc = conditional_centroid(&b).unwrap();
        let pm = marginal_dense(&b).unwrap();
        assert!(max_abs_deviation(&pc, &pm).unwrap() < 1e-10);
        assert!(total_variation(&pc, &pm).unwrap() < 1e-10);
    }

    #[test]
    fn zero_diagonal_rejected() {
        let grid = Grid::new(8, 0.5, 0.3).unwrap();
        let t = WaveTensor::from_fn(grid, 2, Basis::Position, |i| {
            C64::new(if i[0] == i[1] { 0.0 } else { 1.0 }, 0.0)
        })
        .unwrap();
        assert!(matches!(conditional_centroid(&t), Err(Error::ZeroDiagonal)));
    }

    #[test]
    fn absorption_paths_agree() {
        let grid = Grid::new(8, 0.5, 0.3).unwrap();
        let p = random_product(grid, 3, 2, 7);
        let t = p.densify().unwrap();
        for order in 1..=3 {
            let a = absorption_low_rank(&p, order);
            let b = absorption_dense(&t, order);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12 * b.iter().copied().fold(0.0, f64::max));
            }
        }
    }

    #[test]
    fn full_order_absorption_is_conditional() {
        let grid = Grid::new(16, 0.5, 0.3).unwrap();
        let t = random_product(grid, 3, 2, 8).densify().unwrap();
        let sup = PhotonSuperposition::single(State::Dense(t.clone())).unwrap();
        let a = mphoton_absorption(&sup, 3).unwrap();
        let c = conditional_centroid(&t).unwrap();
        assert!(max_abs_deviation(&a, &c).unwrap() < 1e-12);
        assert!(matches!(mphoton_absorption(&sup, 4), Err(Error::IdenticallyZero(_))));
    }
}
