//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building meshes, snapshot sets,
/// POD bases, filters, closures, or ROM trajectories.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear solve failed at step {step}: {reason}")]
    SolveFailure { step: usize, reason: String },

    #[error("non-finite value detected at step {step} ({context})")]
    NonFinite { step: usize, context: String },

    #[error("ROM instability: |a| exceeded {limit:e} at step {step}")]
    RomInstability { step: usize, limit: f64 },

    #[error("zero-energy snapshots: snapshot matrix has no energy in the mass inner product")]
    ZeroEnergySnapshots,

    #[error("eigenvalue {index} is negative beyond round-off ({value:e})")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("bad magic bytes: expected \"ROMS\"")]
    BadMagic,

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u64, found: u64 },

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("matrix {name} is not symmetric: |a_ij - a_ji| = {violation:e} at ({row}, {col})")]
    NotSymmetric {
        name: String,
        row: usize,
        col: usize,
        violation: f64,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
