//! Centroid displacement uncertainty for classical and correlated beams:
//! shot-noise scaling for independent photons, Heisenberg-like scaling as
//! the momentum correlation grows.

use centroid_imaging::lattice::Grid;
use centroid_imaging::measurement::marginal_centroid;
use centroid_imaging::sampler::{shift_experiment, DetectorModel};
use centroid_imaging::states::{classical_product, gaussian_beam, gaussian_profile, GaussianBeamSpec, State};

fn main() -> centroid_imaging::Result<()> {
    let grid = Grid::new(64, 0.5, 0.25)?;
    let prof = gaussian_profile(&grid, 9.0, 0.0)?.state;
    for n in [1, 10, 100] {
        let state = State::LowRank(classical_product(n, &grid, &prof)?);
        let r = shift_experiment(&state, 0.0, &DetectorModel::default(), 50_000, 3)?;
        println!("classical N={n:3}: var {:.5} CI [{:.5}, {:.5}], 9/N = {:.5}", r.estimate.variance, r.estimate.ci_lo, r.estimate.ci_hi, 9.0 / n as f64);
    }

    let grid = Grid::new(32, 0.5, 0.5)?;
    for rho in [0.0, 0.5, 0.9] {
        let spec = GaussianBeamSpec::new(3, grid.k0() / 5.0, rho)?;
        let s = State::Dense(gaussian_beam(&spec, &grid)?.state);
        let v = marginal_centroid(&s)?.variance();
        println!("beam N0=3 rho={rho}: exact var {v:.5}, ideal {:.5}", spec.centroid_variance());
    }
    Ok(())
}
