//! Simulation of optical centroid measurements on multiphoton states.
//!
//! States of N photons live on a periodic 1-D lattice (units of the
//! wavelength) and are kept band-limited to `|k| <= k0 = 2π sinθ`. From a
//! state the crate computes the exact conditional centroid distribution (all
//! photons absorbed at one point), the marginal centroid distribution over
//! every detection pattern, and M-photon absorption patterns. A Monte Carlo
//! sampler runs photon counting through a detector with loss, pixels,
//! saturation and dark counts, and the loss module compares the resulting
//! centroid variance with its analytic prediction.
//!
//! - [`lattice`]: grid, centered unitary DFT, dense and low-rank states, binary container
//! - [`states`]: NOON states, Gaussian beams, correlated biphotons, photon-number superpositions
//! - [`measurement`]: centroid distributions and their spectra
//! - [`sampler`]: position sampling, detector model, histograms, bootstrap statistics
//! - [`loss`]: transmission loss, reduced states, loss sweeps
//! - [`experiment`]: TOML configs and the runner behind the `ocm` binary
//!
//! ```
//! use centroid_imaging::lattice::Grid;
//! use centroid_imaging::measurement::{fringe_metrics, marginal_centroid};
//! use centroid_imaging::states::{default_noon_envelope, noon_state, State};
//!
//! let grid = Grid::new(64, 0.25, 0.25)?;
//! let noon = noon_state(2, &grid, default_noon_envelope(&grid))?.state;
//! let fringe = fringe_metrics(&marginal_centroid(&State::LowRank(noon))?)?;
//! assert!((fringe.period - 1.0).abs() < 1e-9);
//! # Ok::<(), centroid_imaging::Error>(())
//! ```

pub mod error;
pub mod experiment;
pub mod lattice;
pub mod loss;
pub mod measurement;
pub mod sampler;
pub mod states;

pub use error::{Error, ErrorKind, Result};
