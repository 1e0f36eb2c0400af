//! Marginal centroid distribution versus conditional (all photons at one
//! point) for separable beams and a momentum-correlated biphoton.

use centroid_imaging::lattice::Grid;
use centroid_imaging::measurement::{conditional_centroid_of, marginal_centroid, total_variation};
use centroid_imaging::states::{correlated_biphoton, gaussian_beam, GaussianBeamSpec, State};

fn main() -> centroid_imaging::Result<()> {
    let grid = Grid::new(64, 0.5, 0.5)?;
    for n0 in [2, 3] {
        let spec = GaussianBeamSpec::new(n0, grid.k0() / 10.0, 0.0)?;
        let s = State::Dense(gaussian_beam(&spec, &grid)?.state);
        let tv = total_variation(&conditional_centroid_of(&s)?, &marginal_centroid(&s)?)?;
        println!("separable beam N0={n0}: TV(conditional, marginal) = {tv:.2e}");
    }

    let grid = Grid::new(512, 0.25, 0.9)?;
    let sigma_k = grid.k0() / 3.0;
    for ratio in [0.3, 0.1, 0.01] {
        let s = State::Dense(correlated_biphoton(&grid, sigma_k, ratio * sigma_k)?.state);
        let tv = total_variation(&conditional_centroid_of(&s)?, &marginal_centroid(&s)?)?;
        println!("biphoton sigma_kappa/sigma_k={ratio}: TV = {tv:.4}");
    }
    Ok(())
}
