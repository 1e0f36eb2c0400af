//! Transverse grid, N-photon amplitude storage and basis changes.

pub mod container;
mod dft;
mod grid;
mod product;
mod tensor;

pub use grid::{Grid, DEFAULT_AMPLITUDE_CAP};
pub(crate) use product::dot;
pub use product::{Factor, ProductSum, Term};
pub(crate) use tensor::increment;
pub use tensor::{Basis, WaveTensor};
