//! Monte Carlo detection: position sampling, pixelated lossy detection,
//! centroid post-processing and repeated-trial statistics.

mod detector;
mod histogram;
mod positions;
pub mod rng;
mod stats;

pub use detector::{centroid_of_event, detect, DetectorModel, EventRecord, PixelGeometry};
pub use histogram::{
    run_histogram, run_histogram_logged, shift_experiment, CentroidHistogram, RunOutput, ShiftResult, Source,
};
pub use positions::{sample_positions, ChainSampler, DenseSampler, PositionSampler, DENSE_TABLE_LIMIT};
pub use stats::{histogram_variance_with_ci, variance_with_ci, VarianceEstimate, BOOTSTRAP_RESAMPLES};
