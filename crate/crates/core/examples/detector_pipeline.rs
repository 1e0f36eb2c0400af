//! Monte Carlo centroid histogram through a lossy, pixelated detector,
//! compared with the exact distribution.

use centroid_imaging::lattice::Grid;
use centroid_imaging::measurement::{marginal_centroid, total_variation};
use centroid_imaging::sampler::{run_histogram, DetectorModel, Source};
use centroid_imaging::states::{default_noon_envelope, noon_state, State};

fn main() -> centroid_imaging::Result<()> {
    let grid = Grid::new(64, 0.25, 0.25)?;
    let state = State::LowRank(noon_state(2, &grid, default_noon_envelope(&grid))?.state);
    let exact = marginal_centroid(&state)?;
    let source = Source::new(&state)?;

    let ideal = run_histogram(&source, &DetectorModel::default(), 200_000, 1)?;
    println!("ideal detector: TV to exact {:.4}", total_variation(&ideal.stratum(2)?, &exact)?);

    let det = DetectorModel { eta: 0.7, number_resolving: false, keep_saturated: false, dark_rate: 1e-3, ..Default::default() };
    let h = run_histogram(&source, &det, 200_000, 1)?;
    println!(
        "eta=0.7 binary pixels: trials {} discarded {} rejected {} saturated {}",
        h.trials, h.discarded, h.rejected, h.saturated
    );
    for (m, counts) in &h.strata {
        println!("  m={m}: {} events", counts.iter().sum::<u64>());
    }
    let s = h.statistics(1)?;
    println!("pooled centroid variance {:.5} [{:.5}, {:.5}]", s.variance, s.ci_lo, s.ci_hi);
    Ok(())
}
