//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested lattice admits no two-coloring; carries one odd cycle
    /// as evidence (1-based site labels).
    #[error("lattice is not bipartite: odd cycle through sites {0:?}")]
    BipartitionImpossible(Vec<usize>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Operator/state sector bookkeeping mismatch.
    #[error("sector mismatch: expected ({expected_sites} sites, N={expected_n}), got ({got_sites} sites, N={got_n})")]
    SectorMismatch {
        expected_sites: usize,
        expected_n: usize,
        got_sites: usize,
        got_n: usize,
    },

    /// Dense work refused because the sector dimension exceeds the cap.
    #[error("dense solve refused: dimension {dim} exceeds cap {cap} (≈{mem_gib:.1} GiB for one dense matrix); raise the cap or pick a smaller sector")]
    DenseCapExceeded { dim: usize, cap: usize, mem_gib: f64 },

    #[error("particle number {n} out of range for {sites} sites")]
    ParticleNumberOutOfRange { n: usize, sites: usize },

    /// Pair annihilation maps the N<2 sectors nowhere.
    #[error("pair annihilation needs at least 2 particles, sector has {0}")]
    EmptyCodomain(usize),

    #[error("state is not normalized: ‖ψ‖ = {0}")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    /// A projected state vanished identically.
    #[error("degenerate input: {0}")]
    DegenerateState(String),

    #[error("bond set is empty")]
    EmptyBonds,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
