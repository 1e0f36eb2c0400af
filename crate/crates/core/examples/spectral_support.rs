//! Spectral support of the centroid distribution of a random band-limited
//! two-photon state stays inside |omega| <= 2 N k0.

use centroid_imaging::lattice::{Basis, Grid, WaveTensor};
use centroid_imaging::measurement::{marginal_centroid, spectral_power_beyond, spectral_support};
use centroid_imaging::states::State;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> centroid_imaging::Result<()> {
    let grid = Grid::new(32, 0.5, 0.3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = WaveTensor::from_fn(grid, 2, Basis::Momentum, |idx| {
        let c = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        if idx.iter().all(|&j| grid.in_band(j)) {
            c
        } else {
            C64::new(0.0, 0.0)
        }
    })?
    .symmetrize()?;
    let d = marginal_centroid(&State::Dense(t))?;
    let bound = 4.0 * grid.k0();
    println!("2 N k0            = {bound:.4}");
    println!("support (1e-12)   = {:.4}", spectral_support(&d, 1e-12));
    println!("power beyond bound = {:.2e}", spectral_power_beyond(&d, bound + grid.dk()));
    Ok(())
}
