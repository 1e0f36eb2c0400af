//! Exact, non-sampled distributions: conditional and marginal centroid
//! distributions, multi-photon absorption, and their spectra.

mod centroid;
mod distribution;
mod spectral;

pub use centroid::{
    conditional_centroid, conditional_centroid_of, marginal_centroid, marginal_dense, marginal_low_rank,
    marginal_superposition, mphoton_absorption,
};
pub use distribution::{align, max_abs_deviation, total_variation, Distribution};
pub use spectral::{fringe_metrics, spectral_power_beyond, spectral_support, spectrum, FringeMetrics};
