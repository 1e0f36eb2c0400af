//! Vacuum and photon-number components do not change the post-selected
//! centroid distribution, only the fraction of discarded trials.

use centroid_imaging::lattice::Grid;
use centroid_imaging::measurement::{marginal_superposition, max_abs_deviation};
use centroid_imaging::sampler::{run_histogram, DetectorModel, Source};
use centroid_imaging::states::{default_noon_envelope, noon_state, superpose_photon_numbers, State};
use num_complex::Complex64 as C64;

fn main() -> centroid_imaging::Result<()> {
    let grid = Grid::new(64, 0.25, 0.25)?;
    let noon = |n| -> centroid_imaging::Result<State> {
        Ok(State::LowRank(noon_state(n, &grid, default_noon_envelope(&grid))?.state))
    };
    let pure = superpose_photon_numbers(C64::new(0.0, 0.0), vec![(C64::new(0.6, 0.0), noon(2)?), (C64::new(0.8, 0.0), noon(3)?)])?;
    let s = 0.75f64.sqrt();
    let vac = superpose_photon_numbers(
        C64::new(0.5, 0.0),
        vec![(C64::new(0.6 * s, 0.0), noon(2)?), (C64::new(0.8 * s, 0.0), noon(3)?)],
    )?;
    let dev = max_abs_deviation(&marginal_superposition(&pure)?, &marginal_superposition(&vac)?)?;
    println!("max change of the post-selected distribution: {dev:.1e}");

    let h = run_histogram(&Source::superposition(&vac)?, &DetectorModel::with_eta(0.8), 100_000, 7)?;
    println!("discarded fraction {:.4}", h.discarded as f64 / h.trials as f64);
    for m in h.strata.keys() {
        println!("  m={m}: {} events", h.stratum_count(*m));
    }
    Ok(())
}
