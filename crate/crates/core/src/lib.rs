//! Grand canonical (μVT) Monte Carlo for single-site Lennard-Jones fluids.
//!
//! The engine evaluates displacement, insertion and deletion moves through one
//! of three interchangeable neighbor-search strategies:
//!
//! * [`neighbor::AllPairs`]: every move scans all particles.
//! * [`neighbor::CellGrid`]: traditional cell list with cells of edge at least
//!   `r_cut` and a fixed 27-cell neighborhood.
//! * [`neighbor::MicrocellGrid`]: σ³ cells with bounded occupancy, slot-major
//!   storage and an integer-arithmetic search cube.
//!
//! All strategies sum pair terms in a canonical order with compensated
//! accumulation, so runs are reproducible bit-for-bit from a seed and a
//! checkpoint resumes exactly where the original run would have continued.

pub mod bench;
mod buckets;
pub mod checkpoint;
pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod init;
pub mod neighbor;
pub mod particles;
pub mod potential;
pub mod rng;
pub mod runner;
pub mod state;
pub mod sum;
pub mod validate;

pub use config::{BoxSpec, RunConfig, StrategyKind};
pub use engine::{MoveKind, MoveOutcome, Simulation};
pub use error::{Error, Result};
pub use geometry::{SimBox, Vec3};
pub use particles::ParticleStore;
pub use potential::LennardJones;
pub use rng::RngStream;
