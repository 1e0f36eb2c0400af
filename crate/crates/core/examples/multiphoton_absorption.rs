//! M-photon absorption patterns of a photon-number superposition.

use centroid_imaging::lattice::Grid;
use centroid_imaging::measurement::{fringe_metrics, mphoton_absorption};
use centroid_imaging::states::{default_noon_envelope, noon_state, superpose_photon_numbers, State};
use num_complex::Complex64 as C64;

fn main() -> centroid_imaging::Result<()> {
    let grid = Grid::new(64, 0.25, 0.25)?;
    let noon = |n| -> centroid_imaging::Result<State> {
        Ok(State::LowRank(noon_state(n, &grid, default_noon_envelope(&grid))?.state))
    };
    let sup = superpose_photon_numbers(
        C64::new(0.0, 0.0),
        vec![(C64::new(0.6, 0.0), noon(2)?), (C64::from_polar(0.8, 0.3), noon(3)?)],
    )?;
    for order in 1..=3 {
        let a = mphoton_absorption(&sup, order)?;
        match fringe_metrics(&a) {
            Ok(f) => println!("order {order}: {} bins, period {:.4}, visibility {:.3}", a.len(), f.period, f.visibility),
            Err(_) => println!("order {order}: {} bins, no fringe", a.len()),
        }
    }
    Ok(())
}
