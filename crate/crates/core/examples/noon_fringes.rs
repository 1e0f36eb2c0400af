//! Fringe period and visibility of the centroid distribution for NOON states.
//!
//! The period shrinks as 1/N: each extra photon adds resolution without
//! shortening the wavelength.

use centroid_imaging::lattice::Grid;
use centroid_imaging::measurement::{fringe_metrics, marginal_centroid};
use centroid_imaging::states::{default_noon_envelope, noon_state, State};

fn main() -> centroid_imaging::Result<()> {
    // k0 = pi/2, four lattice momenta inside the band
    let grid = Grid::new(64, 0.25, 0.25)?;
    println!("N  period    expected  visibility");
    for n in 1..=4 {
        let state = State::LowRank(noon_state(n, &grid, default_noon_envelope(&grid))?.state);
        let f = fringe_metrics(&marginal_centroid(&state)?)?;
        let expected = 1.0 / (2.0 * n as f64 * grid.sin_theta());
        println!("{n}  {:.6}  {expected:.6}  {:.4}", f.period, f.visibility);
    }
    Ok(())
}
