//! Constructors for NOON states, quantum and classical Gaussian beams,
//! momentum-correlated biphotons and photon-number superpositions.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Basis, Factor, Grid, ProductSum, Term, WaveTensor};

/// Band-projection loss above which results should be treated with care.
/// NOON states refuse to build beyond it; other constructors report it.
pub const MAX_DISCARDED_POWER: f64 = 1e-4;

/// Largest pairwise correlation used for ρ → 1, keeping the covariance regular.
pub const RHO_MAX: f64 = 1.0 - 1e-6;

/// Quantum Gaussian beam parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeamSpec {
    pub n0: usize,
    /// Per-photon rms momentum bandwidth.
    pub delta_k: f64,
    /// Pairwise momentum correlation in `[0, 1]`.
    pub rho: f64,
}

impl GaussianBeamSpec {
    pub fn new(n0: usize, delta_k: f64, rho: f64) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::pre("N0 must be >= 1"));
        }
        if !(delta_k > 0.0 && delta_k.is_finite()) {
            return Err(Error::pre(format!("delta_k = {delta_k} must be positive")));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::pre(format!("rho = {rho} must lie in [0, 1]")));
        }
        Ok(GaussianBeamSpec { n0, delta_k, rho })
    }

    /// Correlation actually used by the constructor (ρ capped at `RHO_MAX`).
    pub fn effective_rho(&self) -> f64 {
        self.rho.min(RHO_MAX)
    }

    /// Normalized centroid variance `R0 = 1 / (1 + (N0 - 1) ρ)`.
    pub fn r0(&self) -> f64 {
        1.0 / (1.0 + (self.n0 as f64 - 1.0) * self.rho)
    }

    /// `R0 / (4 N0 Δk²)`, the centroid variance of the ideal beam.
    pub fn centroid_variance(&self) -> f64 {
        self.r0() / (4.0 * self.n0 as f64 * self.delta_k * self.delta_k)
    }
}

/// A constructed state together with the power its band projection removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared<T> {
    pub state: T,
    pub discarded_power: f64,
}

fn check_discarded(what: &str, discarded: f64) -> Result<()> {
    if discarded > MAX_DISCARDED_POWER {
        return Err(Error::pre(format!(
            "{what}: band projection discards {discarded:.3e} of the power \
             (limit {MAX_DISCARDED_POWER:e}); narrow the spectrum or raise sin_theta"
        )));
    }
    Ok(())
}

/// Default NOON envelope width: far below the lattice spacing, so each
/// envelope occupies a single momentum mode.
pub fn default_noon_envelope(grid: &Grid) -> f64 {
    grid.dk() / 16.0
}

/// `(|N,0⟩ + |0,N⟩)/√2` between two Gaussian momentum envelopes.
///
/// The envelopes sit on the largest lattice momentum inside the band,
/// `±floor(k0/dk)·dk`, so the fringe period is exactly `π/(N k0)` when `k0`
/// is a multiple of `dk`.
pub fn noon_state(n: usize, grid: &Grid, sigma_env: f64) -> Result<Prepared<ProductSum>> {
    if n == 0 {
        return Err(Error::pre("NOON state needs N >= 1"));
    }
    if !(sigma_env > 0.0) || sigma_env > grid.k0() / 4.0 {
        return Err(Error::pre(format!(
            "NOON envelope width {sigma_env} must lie in (0, k0/4 = {}]",
            grid.k0() / 4.0
        )));
    }
    let center = grid.band_edge();
    if center <= 0.0 {
        return Err(Error::pre("band holds no nonzero lattice momentum; enlarge M*dx"));
    }
    let envelope = |c: f64| -> Factor {
        let v: Vec<C64> = grid
            .momenta()
            .iter()
            .map(|k| C64::new((-(k - c).powi(2) / (4.0 * sigma_env * sigma_env)).exp(), 0.0))
            .collect();
        Arc::from(v)
    };
    let plus = envelope(center);
    let minus = envelope(-center);
    let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let p = ProductSum::new(
        *grid,
        n,
        Basis::Momentum,
        vec![Term::repeated(c, plus, n), Term::repeated(c, minus, n)],
    )?;
    let (p, discarded) = p.normalize()?.bandlimit_project()?;
    check_discarded("NOON envelope too wide for band", discarded)?;
    Ok(Prepared {
        state: p.into_basis(Basis::Position),
        discarded_power: discarded,
    })
}

/// Relative-coordinate floor on the position-space quadratic form.
///
/// For ρ → 1 the relative wavepacket would be wider than the box; flooring
/// its coefficient at `25/L²` keeps it to an rms of `L/10` while leaving the
/// centroid coefficient, and therefore the centroid variance, unchanged.
fn relative_floor(grid: &Grid) -> f64 {
    25.0 / (grid.extent() * grid.extent())
}

/// Dense quantum Gaussian beam, `ψ(x) ∝ exp(-xᵀ Σ x)` with
/// `Σ = Δk²[(1-ρ) I + ρ 11ᵀ]`, the Fourier pair of
/// `φ(k) ∝ exp(-¼ kᵀ Σ⁻¹ k)`.
///
/// Built in position space so separable beams (ρ = 0) are exact lattice
/// products, then band-projected.
pub fn gaussian_beam(spec: &GaussianBeamSpec, grid: &Grid) -> Result<Prepared<WaveTensor>> {
    if spec.delta_k > grid.k0() / 3.0 * (1.0 + 1e-12) {
        return Err(Error::pre(format!(
            "delta_k = {} exceeds k0/3 = {}",
            spec.delta_k,
            grid.k0() / 3.0
        )));
    }
    let n = spec.n0;
    let nf = n as f64;
    let rho = spec.effective_rho();
    let dk2 = spec.delta_k * spec.delta_k;
    // exponent -(c Σx² + b (Σx)²); centroid coefficient c N + b N² is fixed
    let c = (dk2 * (1.0 - rho)).max(relative_floor(grid));
    let centroid_coef = dk2 * nf * (1.0 + (nf - 1.0) * rho);
    let b = (centroid_coef - c * nf) / (nf * nf);
    let x = grid.positions();
    let t = WaveTensor::from_fn(*grid, n, Basis::Position, |idx| {
        let (mut q, mut s) = (0.0, 0.0);
        for &i in idx {
            q += x[i] * x[i];
            s += x[i];
        }
        C64::new((-(c * q + b * s * s)).exp(), 0.0)
    })?;
    let (t, discarded) = t.normalize()?.bandlimit_project()?;
    Ok(Prepared { state: t, discarded_power: discarded })
}

/// Two-photon state `φ(k1,k2) ∝ G(k1+k2) H(k1-k2)` with Gaussian `G`, `H` of
/// rms widths `sigma_k` and `sigma_kappa`.
///
/// In position space this is `exp(-σ_K² X² - σ_κ² ξ²/4)` with `X` the
/// centroid and `ξ = x1 - x2`.
pub fn correlated_biphoton(grid: &Grid, sigma_k: f64, sigma_kappa: f64) -> Result<Prepared<WaveTensor>> {
    let k0 = grid.k0();
    if !(sigma_k > 0.0 && sigma_kappa > 0.0) {
        return Err(Error::pre("biphoton widths must be positive"));
    }
    if sigma_k > 2.0 * k0 / 3.0 * (1.0 + 1e-12) || sigma_kappa > 2.0 * k0 / 3.0 * (1.0 + 1e-12) {
        return Err(Error::pre(format!(
            "biphoton widths ({sigma_k}, {sigma_kappa}) must not exceed 2k0/3 = {}",
            2.0 * k0 / 3.0
        )));
    }
    if 2.0 / sigma_kappa > grid.extent() {
        return Err(Error::pre(format!(
            "relative wavepacket (rms 1/sigma_kappa = {}) does not fit the grid extent {}; increase M*dx",
            1.0 / sigma_kappa,
            grid.extent()
        )));
    }
    let x = grid.positions();
    let (a, r) = (sigma_k * sigma_k, sigma_kappa * sigma_kappa / 4.0);
    let t = WaveTensor::from_fn(*grid, 2, Basis::Position, |idx| {
        let (x1, x2) = (x[idx[0]], x[idx[1]]);
        let big = 0.5 * (x1 + x2);
        let xi = x1 - x2;
        C64::new((-(a * big * big + r * xi * xi)).exp(), 0.0)
    })?;
    let (t, discarded) = t.normalize()?.bandlimit_project()?;
    Ok(Prepared { state: t, discarded_power: discarded })
}

/// Normalized, band-projected position-space Gaussian profile with position
/// variance `var_x`, centered at `center`.
pub fn gaussian_profile(grid: &Grid, var_x: f64, center: f64) -> Result<Prepared<Vec<C64>>> {
    if !(var_x > 0.0) {
        return Err(Error::pre("profile variance must be positive"));
    }
    let v: Vec<C64> = grid
        .positions()
        .iter()
        .map(|x| C64::new((-(x - center).powi(2) / (4.0 * var_x)).exp(), 0.0))
        .collect();
    let t = WaveTensor::from_amplitudes(*grid, 1, Basis::Position, v)?;
    let (t, discarded) = t.normalize()?.bandlimit_project()?;
    Ok(Prepared {
        state: t.into_amplitudes(),
        discarded_power: discarded,
    })
}

/// `N` photons in the same position-space mode `profile`.
pub fn classical_product(n: usize, grid: &Grid, profile: &[C64]) -> Result<ProductSum> {
    if n == 0 {
        return Err(Error::pre("classical product needs N >= 1"));
    }
    let t = WaveTensor::from_amplitudes(*grid, 1, Basis::Position, profile.to_vec())?;
    let norm = t.norm_sq();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::pre(format!("profile norm {norm} is not 1")));
    }
    let out = t.out_of_band_power();
    if out > 1e-10 {
        return Err(Error::pre(format!(
            "profile is not band-limited: {out:.3e} of its power lies beyond k0"
        )));
    }
    let f: Factor = Arc::from(profile.to_vec());
    ProductSum::new(*grid, n, Basis::Position, vec![Term::repeated(C64::new(1.0, 0.0), f, n)])
}

/// A fixed-photon-number state in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Dense(WaveTensor),
    LowRank(ProductSum),
}

impl State {
    pub fn photons(&self) -> usize {
        match self {
            State::Dense(t) => t.photons(),
            State::LowRank(p) => p.photons(),
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            State::Dense(t) => t.grid(),
            State::LowRank(p) => p.grid(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            State::Dense(t) => t.norm_sq(),
            State::LowRank(p) => p.norm_sq(),
        }
    }

    /// Dense position-basis tensor (densifying a product sum if needed).
    pub fn to_dense(&self) -> Result<WaveTensor> {
        match self {
            State::Dense(t) => Ok(t.clone().into_basis(Basis::Position)),
            State::LowRank(p) => Ok(p.densify()?.into_basis(Basis::Position)),
        }
    }

    pub fn translate(self, d: f64) -> State {
        match self {
            State::Dense(t) => State::Dense(t.translate(d)),
            State::LowRank(p) => State::LowRank(p.translate(d)),
        }
    }

    pub fn into_basis(self, basis: Basis) -> State {
        match self {
            State::Dense(t) => State::Dense(t.into_basis(basis)),
            State::LowRank(p) => State::LowRank(p.into_basis(basis)),
        }
    }
}

impl From<WaveTensor> for State {
    fn from(t: WaveTensor) -> Self {
        State::Dense(t)
    }
}

impl From<ProductSum> for State {
    fn from(p: ProductSum) -> Self {
        State::LowRank(p)
    }
}

/// `C_0|0⟩ + Σ_N C_N |ψ_N⟩`. Only `|C_N|²` is ever used downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonSuperposition {
    vacuum: C64,
    components: Vec<(C64, State)>,
}

impl PhotonSuperposition {
    pub fn vacuum_amplitude(&self) -> C64 {
        self.vacuum
    }

    pub fn components(&self) -> &[(C64, State)] {
        &self.components
    }

    /// Probability of the vacuum component, `|C_0|²`.
    pub fn vacuum_probability(&self) -> f64 {
        self.vacuum.norm_sqr()
    }

    /// The superposition holding a single fixed-number state.
    pub fn single(state: State) -> Result<Self> {
        superpose_photon_numbers(C64::new(0.0, 0.0), vec![(C64::new(1.0, 0.0), state)])
    }
}

/// Validates and packs a photon-number superposition.
pub fn superpose_photon_numbers(vacuum: C64, components: Vec<(C64, State)>) -> Result<PhotonSuperposition> {
    let mut seen = Vec::new();
    for (_, s) in &components {
        let n = s.photons();
        if seen.contains(&n) {
            return Err(Error::pre(format!("duplicate component with N = {n}")));
        }
        seen.push(n);
        let norm = s.norm_sq();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::pre(format!("component with N = {n} has norm {norm}, expected 1")));
        }
    }
    if let Some((_, first)) = components.first() {
        if components.iter().any(|(_, s)| !s.grid().same_lattice(first.grid())) {
            return Err(Error::Mismatch("superposition components live on different grids".into()));
        }
    }
    let total: f64 = vacuum.norm_sqr() + components.iter().map(|(c, _)| c.norm_sqr()).sum::<f64>();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::pre(format!("sum of |C_N|^2 is {total}, expected 1 within 1e-9")));
    }
    Ok(PhotonSuperposition { vacuum, components })
}
