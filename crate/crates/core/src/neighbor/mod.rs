//! Neighbor-search strategies.
//!
//! Each strategy computes the change in energy and virial for a proposed move
//! and keeps its spatial index in step with the [`ParticleStore`] when the
//! move is committed. Pair terms are summed in a canonical order (ascending
//! particle index within each visited cell, cells in a fixed neighborhood
//! order) with compensated accumulation, so results depend only on the
//! configuration and never on the history of moves. Grids keep each cell's
//! slots sorted on commit so evaluation needs no sorting.

mod all_pairs;
mod cell_list;
mod microcell;

pub use all_pairs::AllPairs;
pub use cell_list::{compute_cell_dims, CellGrid};
pub use microcell::{neighborhood_extent, MicrocellGrid};

use crate::config::{RunConfig, StrategyKind};
use crate::error::Result;
use crate::geometry::{SimBox, Vec3};
use crate::particles::ParticleStore;
use crate::potential::LennardJones;
use crate::sum::PairAccumulator;

/// Largest accepted per-microcell slot count.
pub const MAX_MICROCELL_CAPACITY: usize = 32;

/// Change in total energy and virial caused by a move.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Delta {
    pub energy: f64,
    pub virial: f64,
}

impl Delta {
    fn from_acc(acc: &PairAccumulator) -> Self {
        Delta {
            energy: acc.energy.value(),
            virial: acc.virial.value(),
        }
    }

    fn difference(new: &PairAccumulator, old: &PairAccumulator) -> Self {
        Delta {
            energy: new.energy.value() - old.energy.value(),
            virial: new.virial.value() - old.virial.value(),
        }
    }

    fn negated(self) -> Self {
        Delta {
            energy: -self.energy,
            virial: -self.virial,
        }
    }
}

/// Common contract of the three search strategies.
///
/// `commit_*` must follow the matching `delta_*` on the same proposal. After a
/// commit the index equals what [`NeighborStrategy::build`] would produce on
/// the new configuration, slot order included.
pub trait NeighborStrategy {
    fn kind(&self) -> StrategyKind;

    /// Bins every particle from scratch, in ascending index order.
    fn build(&mut self, particles: &ParticleStore) -> Result<()>;

    fn delta_displace(&self, particles: &ParticleStore, pid: usize, new_pos: Vec3) -> Result<Delta>;

    fn delta_insert(&self, particles: &ParticleStore, pos: Vec3) -> Delta;

    /// Negated interaction of `pid` with every other particle.
    fn delta_delete(&self, particles: &ParticleStore, pid: usize) -> Result<Delta>;

    fn commit_displace(&mut self, particles: &mut ParticleStore, pid: usize, new_pos: Vec3) -> Result<()>;

    fn commit_insert(&mut self, particles: &mut ParticleStore, pos: Vec3) -> Result<usize>;

    /// Removes `pid`; the last particle takes over its index.
    fn commit_delete(&mut self, particles: &mut ParticleStore, pid: usize) -> Result<()>;

    /// Compares the index against a fresh binning of `particles`.
    fn rebuild_check(&self, particles: &ParticleStore) -> std::result::Result<(), String>;
}

#[inline(always)]
fn accumulate(acc: &mut PairAccumulator, lj: &LennardJones, r2: f64) {
    if r2 <= lj.r_cut2() {
        let (u, w) = lj.proposal_terms(r2);
        acc.add(u, w);
    }
}

/// Runtime-selected strategy.
#[derive(Clone, Debug)]
pub enum AnyStrategy {
    AllPairs(AllPairs),
    CellList(CellGrid),
    Microcell(MicrocellGrid),
}

impl AnyStrategy {
    /// Creates an empty (unbuilt) index for `kind`.
    pub fn new(kind: StrategyKind, sim_box: SimBox, lj: LennardJones, cfg: &RunConfig) -> Self {
        match kind {
            StrategyKind::AllPairs => AnyStrategy::AllPairs(AllPairs::new(sim_box, lj)),
            StrategyKind::CellList => AnyStrategy::CellList(CellGrid::new(sim_box, lj, cfg.effective_cell_capacity())),
            StrategyKind::Microcell => AnyStrategy::Microcell(MicrocellGrid::new(sim_box, lj, cfg.microcell_capacity)),
        }
    }

    pub fn as_cell_grid(&self) -> Option<&CellGrid> {
        match self {
            AnyStrategy::CellList(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_microcell(&self) -> Option<&MicrocellGrid> {
        match self {
            AnyStrategy::Microcell(g) => Some(g),
            _ => None,
        }
    }

    /// Overwrites one raw slot of a grid strategy. Used to test that audits
    /// catch a corrupted index; no-op for all-pairs.
    #[doc(hidden)]
    pub fn debug_overwrite_slot(&mut self, cell: usize, k: usize, value: u32) {
        match self {
            AnyStrategy::AllPairs(_) => {}
            AnyStrategy::CellList(g) => g.debug_overwrite_slot(cell, k, value),
            AnyStrategy::Microcell(g) => g.debug_overwrite_slot(cell, k, value),
        }
    }
}

macro_rules! delegate {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            AnyStrategy::AllPairs($s) => $e,
            AnyStrategy::CellList($s) => $e,
            AnyStrategy::Microcell($s) => $e,
        }
    };
}

impl NeighborStrategy for AnyStrategy {
    fn kind(&self) -> StrategyKind {
        delegate!(self, s => s.kind())
    }

    fn build(&mut self, particles: &ParticleStore) -> Result<()> {
        delegate!(self, s => s.build(particles))
    }

    #[inline]
    fn delta_displace(&self, particles: &ParticleStore, pid: usize, new_pos: Vec3) -> Result<Delta> {
        delegate!(self, s => s.delta_displace(particles, pid, new_pos))
    }

    #[inline]
    fn delta_insert(&self, particles: &ParticleStore, pos: Vec3) -> Delta {
        delegate!(self, s => s.delta_insert(particles, pos))
    }

    #[inline]
    fn delta_delete(&self, particles: &ParticleStore, pid: usize) -> Result<Delta> {
        delegate!(self, s => s.delta_delete(particles, pid))
    }

    fn commit_displace(&mut self, particles: &mut ParticleStore, pid: usize, new_pos: Vec3) -> Result<()> {
        delegate!(self, s => s.commit_displace(particles, pid, new_pos))
    }

    fn commit_insert(&mut self, particles: &mut ParticleStore, pos: Vec3) -> Result<usize> {
        delegate!(self, s => s.commit_insert(particles, pos))
    }

    fn commit_delete(&mut self, particles: &mut ParticleStore, pid: usize) -> Result<()> {
        delegate!(self, s => s.commit_delete(particles, pid))
    }

    fn rebuild_check(&self, particles: &ParticleStore) -> std::result::Result<(), String> {
        delegate!(self, s => s.rebuild_check(particles))
    }
}

/// Shared consistency check for the two grid types: occupant lists must be
/// ascending and equal to a fresh binning, cell by cell.
fn compare_cells(
    label: &str,
    n_cells: usize,
    n_particles: usize,
    current: impl Fn(usize) -> Vec<u32>,
    fresh: impl Fn(usize) -> Vec<u32>,
) -> std::result::Result<(), String> {
    let mut seen = 0usize;
    for c in 0..n_cells {
        let have = current(c);
        if let Some(&bad) = have.iter().find(|&&j| j as usize >= n_particles) {
            return Err(format!(
                "{label} cell {c} holds dead particle index {bad} (N = {n_particles})"
            ));
        }
        if have.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("{label} cell {c}: occupants {have:?} not in ascending order"));
        }
        let want = fresh(c);
        if have != want {
            return Err(format!(
                "{label} cell {c}: holds {have:?}, fresh binning gives {want:?}"
            ));
        }
        seen += have.len();
    }
    if seen != n_particles {
        return Err(format!("{label}: {seen} indexed particles, store holds {n_particles}"));
    }
    Ok(())
}
