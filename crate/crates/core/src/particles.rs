use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Positions of the `N` particles currently in the box.
///
/// Indices are always dense `0..N`; removing a particle moves the last record
/// into the freed slot.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleStore {
    positions: Vec<Vec3>,
    capacity: usize,
}

impl ParticleStore {
    pub fn with_capacity(capacity: usize) -> Self {
        ParticleStore {
            positions: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn from_positions(positions: Vec<Vec3>, capacity: usize) -> Result<Self> {
        if positions.len() > capacity {
            return Err(Error::StoreFull(capacity));
        }
        Ok(ParticleStore { positions, capacity })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    #[inline]
    pub fn get(&self, pid: usize) -> Result<Vec3> {
        self.positions.get(pid).copied().ok_or(Error::InvalidParticle {
            index: pid,
            count: self.len(),
        })
    }

    pub fn set(&mut self, pid: usize, pos: Vec3) -> Result<()> {
        let count = self.len();
        let slot = self
            .positions
            .get_mut(pid)
            .ok_or(Error::InvalidParticle { index: pid, count })?;
        *slot = pos;
        Ok(())
    }

    /// Appends a particle and returns its index.
    pub fn push(&mut self, pos: Vec3) -> Result<usize> {
        if self.len() >= self.capacity {
            return Err(Error::StoreFull(self.capacity));
        }
        self.positions.push(pos);
        Ok(self.positions.len() - 1)
    }

    /// Removes `pid`, moving the last particle into its slot.
    pub fn swap_remove(&mut self, pid: usize) -> Result<Vec3> {
        if pid >= self.len() {
            return Err(Error::InvalidParticle {
                index: pid,
                count: self.len(),
            });
        }
        Ok(self.positions.swap_remove(pid))
    }

    pub(crate) fn check_index(&self, pid: usize) -> Result<()> {
        if pid < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidParticle {
                index: pid,
                count: self.len(),
            })
        }
    }
}
