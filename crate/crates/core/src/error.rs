use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate {0:?}")]
    NonFinite(Vec3),

    #[error("particle index {index} out of range (N = {count})")]
    InvalidParticle { index: usize, count: usize },

    #[error("particles {i} and {j} overlap (r² = {r2:e})")]
    Overlap { i: usize, j: usize, r2: f64 },

    #[error("pair evaluated at zero separation")]
    ZeroDistance,

    #[error(
        "cell {cell} overflow: occupancy {occupancy} already at capacity {capacity}; raise the cell capacity and rerun"
    )]
    CellOverflow {
        cell: usize,
        occupancy: usize,
        capacity: usize,
    },

    #[error("spatial index corrupt: {0}")]
    Corrupt(String),

    #[error("particle store is full (capacity {0})")]
    StoreFull(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("could not place particle {placed} after {attempts} consecutive rejected candidates")]
    Placement { placed: usize, attempts: u64 },

    #[error("audit failed at step {step}: {detail}")]
    Audit { step: u64, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
