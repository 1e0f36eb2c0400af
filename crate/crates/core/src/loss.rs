//! Photon loss: per-photon thinning, the exact reduced-state oracle for small
//! photon numbers, and the analytic Gaussian-beam loss formulas.
//!
//! The analytic formulas are large-N, Gaussian-beam results. They are exact in
//! the classical (`R0 = 1`) and lossless limits and qualitative elsewhere.

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Basis, Grid, WaveTensor};
use crate::measurement::{marginal_centroid, mphoton_absorption, Distribution};
use crate::sampler::rng::{stream, Domain};
use crate::sampler::{run_histogram, DetectorModel, Source, VarianceEstimate};
use crate::states::{GaussianBeamSpec, PhotonSuperposition, State};

/// Detector efficiency and propagation loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossParams {
    pub eta_det: f64,
    /// Propagation loss exponent `α z`.
    #[serde(default)]
    pub alpha_z: f64,
}

impl LossParams {
    pub fn new(eta_det: f64, alpha_z: f64) -> Result<Self> {
        if !(eta_det > 0.0 && eta_det <= 1.0) {
            return Err(Error::pre(format!("eta_det = {eta_det} outside (0, 1]")));
        }
        if !(alpha_z >= 0.0 && alpha_z.is_finite()) {
            return Err(Error::pre(format!("alpha_z = {alpha_z} must be finite and non-negative")));
        }
        Ok(LossParams { eta_det, alpha_z })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.eta_det, self.alpha_z).map(|_| ())
    }

    /// Probability that a photon is both transmitted and detected.
    pub fn survival(&self) -> f64 {
        self.eta_det * (-self.alpha_z).exp()
    }

    /// Mean photon number reaching the detector.
    pub fn n_z(&self, n0: f64) -> f64 {
        n0 * (-self.alpha_z).exp()
    }
}

/// Keeps each photon independently with probability `p`.
pub fn thin_positions(positions: &[usize], p: f64, rng: &mut impl Rng) -> Vec<usize> {
    positions.iter().copied().filter(|_| p >= 1.0 || rng.random::<f64>() < p).collect()
}

/// Density operator of `m` photons in the position basis, in density units:
/// `Σ_a ρ(a, a) dx^m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    grid: Grid,
    photons: usize,
    /// Row-major `M^m × M^m`.
    rho: Vec<C64>,
}

impl ReducedDensity {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn dim(&self) -> usize {
        self.grid.points().pow(self.photons as u32)
    }

    pub fn element(&self, a: usize, b: usize) -> C64 {
        self.rho[a * self.dim() + b]
    }

    /// Joint position pmf of the `m` photons (row-major, photon 1 slowest).
    pub fn position_pmf(&self) -> Vec<f64> {
        let d = self.dim();
        let cell = self.grid.dx().powi(self.photons as i32);
        (0..d).map(|a| self.rho[a * d + a].re * cell).collect()
    }

    /// Centroid marginal of the `m` photons on the `dx/m` lattice.
    pub fn centroid(&self) -> Result<Distribution> {
        let m = self.grid.points();
        let mut w = vec![0.0; self.photons * (m - 1) + 1];
        let mut idx = vec![0usize; self.photons];
        for p in self.position_pmf() {
            w[idx.iter().sum::<usize>()] += p;
            crate::lattice::increment(&mut idx, m);
        }
        Distribution::from_weights(
            self.grid.dx() / self.photons as f64,
            self.grid.position(0),
            w,
            Some(m),
        )
    }
}

/// Partial trace of `|ψ⟩⟨ψ|` over the last `N - m` photons. By exchange
/// symmetry any choice of traced photons gives the same result.
pub fn reduced_state(t: &WaveTensor, m: usize) -> Result<ReducedDensity> {
    let n = t.photons();
    if n > 3 {
        return Err(Error::pre(format!("reduced states are limited to N <= 3, got {n}")));
    }
    if m == 0 || m > n {
        return Err(Error::pre(format!("survivor count {m} outside 1..={n}")));
    }
    let grid = *t.grid();
    let d = grid.dense_len(2 * m)?;
    let d = (d as f64).sqrt().round() as usize;
    let t = t.clone().into_basis(Basis::Position);
    let rest = grid.points().pow((n - m) as u32);
    let amp = t.amplitudes();
    let scale = grid.dx().powi((n - m) as i32);
    let rho: Vec<C64> = (0..d * d)
        .into_par_iter()
        .map(|ab| {
            let (a, b) = (ab / d, ab % d);
            let ra = &amp[a * rest..(a + 1) * rest];
            let rb = &amp[b * rest..(b + 1) * rest];
            ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum::<C64>() * scale
        })
        .collect();
    Ok(ReducedDensity { grid, photons: m, rho })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    /// `C(N, m) p^m (1 - p)^{N - m}`.
    pub weight: f64,
    pub survivors: usize,
    /// `None` for the vacuum component.
    pub density: Option<ReducedDensity>,
}

/// State after uniform loss, as a mixture over survivor counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMixture {
    pub components: Vec<MixtureComponent>,
}

pub fn density_mixture(t: &WaveTensor, p: f64) -> Result<DensityMixture> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::pre(format!("survival probability {p} outside (0, 1]")));
    }
    let n = t.photons();
    let components = (0..=n)
        .map(|m| {
            let weight = binomial(n, m) * p.powi(m as i32) * (1.0 - p).powi((n - m) as i32);
            let density = if m == 0 { None } else { Some(reduced_state(t, m)?) };
            Ok(MixtureComponent { weight, survivors: m, density })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityMixture { components })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Centroid variance after loss,
/// `var0 + Δx² / (η N_z) · (1 - η e^{-αz})`.
pub fn lossy_variance_with_width(n0: f64, lp: &LossParams, var0: f64, width_sq: f64) -> f64 {
    let n_z = lp.n_z(n0);
    var0 + width_sq / (lp.eta_det * n_z) * (1.0 - lp.eta_det * (-lp.alpha_z).exp())
}

/// As [`lossy_variance_with_width`] with the beam width from [`beam_width_sq`].
pub fn lossy_variance(spec: &GaussianBeamSpec, lp: &LossParams, var0: f64) -> Result<f64> {
    Ok(lossy_variance_with_width(spec.n0 as f64, lp, var0, beam_width_sq(spec)?))
}

/// Classical beam width squared of a quantum Gaussian beam,
/// `(1/(4Δk²)) [R0/N0 + (1 - 1/N0)² / (1 - 1/(N0 R0))]`.
///
/// Singular at the Heisenberg limit `N0 R0 = 1`.
pub fn beam_width_sq(spec: &GaussianBeamSpec) -> Result<f64> {
    let n0 = spec.n0 as f64;
    let r0 = spec.r0();
    let n0r0 = n0 * r0;
    if n0r0 <= 1.0 {
        return Err(Error::HeisenbergSingular { n0r0 });
    }
    let dk2 = spec.delta_k * spec.delta_k;
    Ok((r0 / n0 + (1.0 - 1.0 / n0).powi(2) / (1.0 - 1.0 / n0r0)) / (4.0 * dk2))
}

/// One row of a loss sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub alpha_z: f64,
    pub p: f64,
    pub n_z: f64,
    pub measured: VarianceEstimate,
    pub predicted_var: f64,
    pub rel_dev: f64,
}

/// Inputs to the analytic prediction, measured exactly from the lossless state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosslessReference {
    pub n0: usize,
    /// Exact lossless centroid variance.
    pub var0: f64,
    /// Exact single-photon position variance.
    pub width_sq: f64,
}

impl LosslessReference {
    pub fn of(state: &State) -> Result<Self> {
        let var0 = marginal_centroid(state)?.variance();
        let single = mphoton_absorption(&PhotonSuperposition::single(state.clone())?, 1)?;
        Ok(LosslessReference { n0: state.photons(), var0, width_sq: single.variance() })
    }
}

/// Monte Carlo centroid variance over all `m ≥ 1` events for each loss
/// setting, next to the analytic prediction. Each row uses its own seed
/// derived from `seed` and the row index.
pub fn loss_sweep(
    state: &State,
    det: &DetectorModel,
    losses: &[LossParams],
    trials: u64,
    seed: u64,
) -> Result<(LosslessReference, Vec<SweepRow>)> {
    let reference = LosslessReference::of(state)?;
    let source = Source::new(state)?;
    let rows = losses
        .iter()
        .enumerate()
        .map(|(i, lp)| {
            lp.validate()?;
            let row_seed: u64 = stream(seed, Domain::Thinning, i as u64).random();
            let d = DetectorModel { eta: lp.survival(), ..*det };
            let h = run_histogram(&source, &d, trials, row_seed)?;
            let measured = h.statistics(row_seed)?;
            let predicted_var = lossy_variance_with_width(reference.n0 as f64, lp, reference.var0, reference.width_sq);
            Ok(SweepRow {
                eta: lp.eta_det,
                alpha_z: lp.alpha_z,
                p: lp.survival(),
                n_z: lp.n_z(reference.n0 as f64),
                measured,
                predicted_var,
                rel_dev: measured.variance / predicted_var - 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, rows))
}

/// Sweep table as CSV.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("eta,alpha_z,p,N_z,measured_var,ci_lo,ci_hi,predicted_var,rel_dev\n");
    for r in rows {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.eta, r.alpha_z, r.p, r.n_z, r.measured.variance, r.measured.ci_lo, r.measured.ci_hi, r.predicted_var, r.rel_dev
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ProductSum;
    use crate::measurement::{fringe_metrics, marginal_dense, total_variation};
    use crate::states::{default_noon_envelope, noon_state};
    use approx::assert_relative_eq;

    fn noon2_dense() -> (ProductSum, WaveTensor) {
        let grid = Grid::new(32, 0.5, 0.25).unwrap();
        let p = noon_state(2, &grid, default_noon_envelope(&grid)).unwrap().state;
        let t = p.densify().unwrap();
        (p, t)
    }

    #[test]
    fn loss_params() {
        let lp = LossParams::new(0.5, 2f64.ln()).unwrap();
        assert_relative_eq!(lp.survival(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(lp.n_z(10.0), 5.0, max_relative = 1e-15);
        assert!(LossParams::new(0.0, 0.0).is_err());
        assert!(LossParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn lossy_variance_examples() {
        let lp = LossParams::new(0.5, 2f64.ln()).unwrap();
        assert_relative_eq!(lossy_variance_with_width(10.0, &lp, 0.025, 0.25), 0.1, max_relative = 1e-14);
        let lossless = LossParams::new(1.0, 0.0).unwrap();
        assert_eq!(lossy_variance_with_width(10.0, &lossless, 0.0371, 0.25), 0.0371);
    }

    #[test]
    fn beam_width_examples() {
        let classical = GaussianBeamSpec::new(10, 1.0, 0.0).unwrap();
        assert_eq!(beam_width_sq(&classical).unwrap(), 0.25);
        // R0 = 0.5 at N0 = 10 means rho = 1/9
        let s = GaussianBeamSpec::new(10, 1.0, 1.0 / 9.0).unwrap();
        assert_relative_eq!(beam_width_sq(&s).unwrap(), 0.25 * 1.0625, max_relative = 1e-12);
        let heisenberg = GaussianBeamSpec::new(10, 1.0, 1.0).unwrap();
        assert!(matches!(beam_width_sq(&heisenberg), Err(Error::HeisenbergSingular { .. })));
    }

    #[test]
    fn thinning() {
        let mut rng = stream(0, Domain::Thinning, 0);
        assert_eq!(thin_positions(&[1, 2, 3], 1.0, &mut rng), vec![1, 2, 3]);
        let mut counts = [0usize; 3];
        for t in 0..40_000 {
            counts[thin_positions(&[4, 5], 0.5, &mut stream(2, Domain::Thinning, t)).len()] += 1;
        }
        for (k, e) in [0.25, 0.5, 0.25].iter().enumerate() {
            let sigma = (e * (1.0 - e) / 40_000.0f64).sqrt();
            assert!((counts[k] as f64 / 40_000.0 - e).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn full_survival_is_the_state_itself() {
        let (_, t) = noon2_dense();
        let r = reduced_state(&t, 2).unwrap();
        let pmf = t.position_pmf();
        for (a, b) in r.position_pmf().iter().zip(&pmf) {
            assert!((a - b).abs() < 1e-15);
        }
        let tv = total_variation(&r.centroid().unwrap(), &marginal_dense(&t).unwrap()).unwrap();
        assert!(tv < 1e-13);
    }

    #[test]
    fn separable_pair_reduces_to_single_photon() {
        let grid = Grid::new(16, 0.5, 0.3).unwrap();
        let prof = crate::states::gaussian_profile(&grid, 2.0, 0.3).unwrap().state;
        let t = crate::states::classical_product(2, &grid, &prof).unwrap().densify().unwrap();
        let r = reduced_state(&t, 1).unwrap();
        for (a, u) in r.position_pmf().iter().zip(&prof) {
            assert!((a - u.norm_sqr() * grid.dx()).abs() < 1e-14);
        }
    }

    #[test]
    fn noon_single_survivor_is_incoherent_mixture() {
        let (p, t) = noon2_dense();
        let grid = *t.grid();
        let r = reduced_state(&t, 1).unwrap();
        // oracle: Σ_r |c_r|² ‖u_r‖² u_r u_r†, the cross terms vanish since ⟨u+|u-⟩ = 0
        let p = p.into_basis(Basis::Position);
        let m = grid.points();
        for a in 0..m {
            for b in 0..m {
                let mut expect = C64::new(0.0, 0.0);
                for term in p.terms() {
                    let u = &term.factors[0];
                    let nrm: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx();
                    expect += term.coef.norm_sqr() * nrm * u[a] * u[b].conj();
                }
                assert!((r.element(a, b) - expect).norm() < 1e-12);
            }
        }
        let pmf = r.centroid().unwrap();
        assert!(fringe_metrics(&pmf).is_err() || fringe_metrics(&pmf).unwrap().visibility < 1e-6);
    }

    #[test]
    fn mixture_weights_are_binomial() {
        let (_, t) = noon2_dense();
        let mix = density_mixture(&t, 0.3).unwrap();
        let w: Vec<f64> = mix.components.iter().map(|c| c.weight).collect();
        assert_relative_eq!(w[0], 0.49, max_relative = 1e-14);
        assert_relative_eq!(w[1], 0.42, max_relative = 1e-14);
        assert_relative_eq!(w[2], 0.09, max_relative = 1e-14);
        assert!(mix.components[0].density.is_none());
        assert!(reduced_state(&t, 3).is_err());
    }
}
