//! Loss sweep: measured centroid variance under transmission loss next to
//! the analytic prediction, for a classical beam and a correlated beam.
//!
//! The prediction ignores the position covariance between surviving photons.
//! It tracks the classical beam; for strongly correlated photons the measured
//! variance grows faster.

use centroid_imaging::lattice::Grid;
use centroid_imaging::loss::{loss_sweep, LossParams};
use centroid_imaging::sampler::DetectorModel;
use centroid_imaging::states::{classical_product, gaussian_beam, gaussian_profile, GaussianBeamSpec, State};

fn print(label: &str, state: &State, losses: &[LossParams]) -> centroid_imaging::Result<()> {
    let (reference, rows) = loss_sweep(state, &DetectorModel::default(), losses, 50_000, 4)?;
    println!("{label}: lossless var {:.5}", reference.var0);
    for r in rows {
        println!(
            "  eta {:.2} alpha_z {:.2}: measured {:.5} predicted {:.5} ({:+.1}%)",
            r.eta, r.alpha_z, r.measured.variance, r.predicted_var, 100.0 * r.rel_dev
        );
    }
    Ok(())
}

fn main() -> centroid_imaging::Result<()> {
    let losses: Vec<LossParams> =
        [(1.0, 0.0), (0.9, 0.0), (0.7, 0.0), (0.5, 0.0)].iter().map(|&(e, a)| LossParams::new(e, a)).collect::<Result<_, _>>()?;

    let grid = Grid::new(64, 0.5, 0.25)?;
    let prof = gaussian_profile(&grid, 9.0, 0.0)?.state;
    print("classical N0=50", &State::LowRank(classical_product(50, &grid, &prof)?), &losses)?;

    let grid = Grid::new(32, 0.5, 0.5)?;
    let spec = GaussianBeamSpec::new(3, grid.k0() / 5.0, 0.9)?;
    print("correlated beam N0=3 rho=0.9", &State::Dense(gaussian_beam(&spec, &grid)?.state), &losses)?;
    Ok(())
}
