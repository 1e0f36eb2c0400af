use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the experiment runner to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input: bad config, bad file, mismatched shapes.
    Schema,
    /// A physical or numerical precondition does not hold.
    Physics,
    /// A configured resource cap would be exceeded.
    Resource,
    /// Filesystem trouble.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "Nyquist violation: band limit k0 = {k0:.6} exceeds pi/dx = {nyquist:.6}; \
         reduce sin_theta or the grid spacing"
    )]
    Nyquist { k0: f64, nyquist: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("dense tensor needs {requested} amplitudes, above the configured cap of {cap}")]
    MemoryCap { requested: u128, cap: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("conditional distribution undefined: zero diagonal")]
    ZeroDiagonal,

    #[error("nothing to post-select: the state is pure vacuum")]
    NothingToPostSelect,

    #[error("distribution identically zero: {0}")]
    IdenticallyZero(String),

    #[error("no fringe detected")]
    NoFringe,

    #[error("incompatible supports: {0}")]
    IncompatibleSupport(String),

    #[error("negative conditional mass {mass:e} at coordinate {coordinate} (tolerance -1e-12)")]
    NegativeMass { coordinate: usize, mass: f64 },

    #[error("all trials were discarded; no centroid statistics available")]
    AllDiscarded,

    #[error("at least {needed} retained samples are required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("beam width formula singular at/below the Heisenberg limit (N0*R0 = {n0r0} <= 1)")]
    HeisenbergSingular { n0r0: f64 },

    #[error("bad container: {0}")]
    Container(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            MemoryCap { .. } => ErrorKind::Resource,
            Io(_) => ErrorKind::Io,
            Mismatch(_) | Container(_) | Config(_) | IncompatibleSupport(_) => ErrorKind::Schema,
            _ => ErrorKind::Physics,
        }
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
