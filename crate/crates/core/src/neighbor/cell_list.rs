//! Traditional cell list: `T³` cells of edge `S >= r_cut` (or `L/3` for small
//! boxes), fixed-capacity slot arrays, and a precomputed 27-cell neighbor
//! table.

use super::{accumulate, compare_cells, Delta, NeighborStrategy};
use crate::config::StrategyKind;
use crate::error::{Error, Result};
use crate::geometry::{SimBox, Vec3};
use crate::particles::ParticleStore;
use crate::potential::LennardJones;
use crate::sum::PairAccumulator;

/// Cells per dimension and cell edge for a box of side `l`.
///
/// Picks the largest `T` with `l / T >= r_cut`; boxes narrower than three
/// cutoffs get `T = 3`, `S = l / 3`, where the 27 cells tile the whole box.
pub fn compute_cell_dims(l: f64, r_cut: f64) -> (usize, f64) {
    let mut t = (l / r_cut).floor() as usize;
    if t < 3 {
        return (3, l / 3.0);
    }
    while t > 3 && l / (t as f64) < r_cut {
        t -= 1;
    }
    (t, l / t as f64)
}

#[derive(Clone, Debug)]
pub struct CellGrid {
    sim_box: SimBox,
    lj: LennardJones,
    cells_per_dim: usize,
    cell_size: f64,
    inv_cell: f64,
    capacity: usize,
    occupancy: Vec<u32>,
    /// Cell-major: slot `k` of cell `c` lives at `c * capacity + k`. Each
    /// cell's occupants are kept in ascending index order.
    slots: Vec<u32>,
    neighbors: Vec<[u32; 27]>,
}

impl CellGrid {
    pub fn new(sim_box: SimBox, lj: LennardJones, capacity: usize) -> Self {
        let (t, s) = compute_cell_dims(sim_box.side(), lj.r_cut());
        let n_cells = t * t * t;
        let mut neighbors = Vec::with_capacity(n_cells);
        for z in 0..t {
            for y in 0..t {
                for x in 0..t {
                    let mut table = [0u32; 27];
                    let mut k = 0;
                    for dz in [t - 1, 0, 1] {
                        for dy in [t - 1, 0, 1] {
                            for dx in [t - 1, 0, 1] {
                                let id = (x + dx) % t + t * ((y + dy) % t + t * ((z + dz) % t));
                                table[k] = id as u32;
                                k += 1;
                            }
                        }
                    }
                    neighbors.push(table);
                }
            }
        }
        CellGrid {
            sim_box,
            lj,
            cells_per_dim: t,
            cell_size: s,
            inv_cell: t as f64 / sim_box.side(),
            capacity,
            occupancy: vec![0; n_cells],
            slots: vec![0; n_cells * capacity],
            neighbors,
        }
    }

    pub fn cells_per_dim(&self) -> usize {
        self.cells_per_dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn n_cells(&self) -> usize {
        self.occupancy.len()
    }

    #[inline]
    fn axis_index(&self, c: f64) -> usize {
        ((c * self.inv_cell) as usize).min(self.cells_per_dim - 1)
    }

    /// Integer cell coordinates of a wrapped position.
    #[inline]
    pub fn cell_coords(&self, p: &Vec3) -> [usize; 3] {
        [self.axis_index(p[0]), self.axis_index(p[1]), self.axis_index(p[2])]
    }

    #[inline]
    pub fn cell_of(&self, p: &Vec3) -> usize {
        let [x, y, z] = self.cell_coords(p);
        let t = self.cells_per_dim;
        x + t * (y + t * z)
    }

    pub fn occupancy(&self, cell: usize) -> usize {
        self.occupancy[cell] as usize
    }

    pub fn occupants(&self, cell: usize) -> &[u32] {
        let base = cell * self.capacity;
        &self.slots[base..base + self.occupancy[cell] as usize]
    }

    /// The 27 cells (self included) scanned for a particle in `cell`.
    pub fn neighborhood(&self, cell: usize) -> &[u32; 27] {
        &self.neighbors[cell]
    }

    #[inline(always)]
    fn visit_neighborhood(&self, cell: usize, mut f: impl FnMut(usize)) {
        for &nc in &self.neighbors[cell] {
            for &j in self.occupants(nc as usize) {
                f(j as usize);
            }
        }
    }

    fn sum_around(&self, particles: &ParticleStore, center: &Vec3, skip: usize) -> PairAccumulator {
        let pos = particles.positions();
        let mut acc = PairAccumulator::default();
        self.visit_neighborhood(self.cell_of(center), |j| {
            if j != skip {
                accumulate(&mut acc, &self.lj, self.sim_box.dist2(center, &pos[j]));
            }
        });
        acc
    }

    fn append(&mut self, cell: usize, pid: usize) -> Result<()> {
        let occ = self.occupancy[cell] as usize;
        if occ >= self.capacity {
            return Err(Error::CellOverflow {
                cell,
                occupancy: occ,
                capacity: self.capacity,
            });
        }
        let base = cell * self.capacity;
        let cell_slots = &mut self.slots[base..base + occ + 1];
        let k = cell_slots[..occ].partition_point(|&j| (j as usize) < pid);
        cell_slots.copy_within(k..occ, k + 1);
        cell_slots[k] = pid as u32;
        self.occupancy[cell] += 1;
        Ok(())
    }

    fn find_slot(&self, cell: usize, pid: usize) -> Result<usize> {
        self.occupants(cell)
            .iter()
            .position(|&j| j as usize == pid)
            .ok_or_else(|| Error::Corrupt(format!("particle {pid} missing from cell {cell}")))
    }

    fn remove(&mut self, cell: usize, pid: usize) -> Result<()> {
        let k = self.find_slot(cell, pid)?;
        let base = cell * self.capacity;
        let occ = self.occupancy[cell] as usize;
        self.slots.copy_within(base + k + 1..base + occ, base + k);
        self.occupancy[cell] -= 1;
        Ok(())
    }

    fn rename(&mut self, cell: usize, from: usize, to: usize) -> Result<()> {
        self.remove(cell, from)?;
        self.append(cell, to)
    }

    fn fresh_occupants(&self, particles: &ParticleStore) -> Vec<Vec<u32>> {
        let mut cells = vec![Vec::new(); self.n_cells()];
        for (i, p) in particles.positions().iter().enumerate() {
            cells[self.cell_of(p)].push(i as u32);
        }
        cells
    }

    pub(crate) fn debug_overwrite_slot(&mut self, cell: usize, k: usize, value: u32) {
        self.slots[cell * self.capacity + k] = value;
    }
}

impl NeighborStrategy for CellGrid {
    fn kind(&self) -> StrategyKind {
        StrategyKind::CellList
    }

    fn build(&mut self, particles: &ParticleStore) -> Result<()> {
        self.occupancy.iter_mut().for_each(|o| *o = 0);
        for (i, p) in particles.positions().iter().enumerate() {
            self.append(self.cell_of(p), i)?;
        }
        Ok(())
    }

    fn delta_displace(&self, particles: &ParticleStore, pid: usize, new_pos: Vec3) -> Result<Delta> {
        let old_pos = particles.get(pid)?;
        let old_cell = self.cell_of(&old_pos);
        let new_cell = self.cell_of(&new_pos);
        if old_cell != new_cell {
            let old = self.sum_around(particles, &old_pos, pid);
            let new = self.sum_around(particles, &new_pos, pid);
            return Ok(Delta::difference(&new, &old));
        }
        // Same cell: one traversal serves both positions.
        let pos = particles.positions();
        let mut old = PairAccumulator::default();
        let mut new = PairAccumulator::default();
        self.visit_neighborhood(old_cell, |j| {
            if j != pid {
                let q = &pos[j];
                accumulate(&mut old, &self.lj, self.sim_box.dist2(&old_pos, q));
                accumulate(&mut new, &self.lj, self.sim_box.dist2(&new_pos, q));
            }
        });
        Ok(Delta::difference(&new, &old))
    }

    fn delta_insert(&self, particles: &ParticleStore, pos: Vec3) -> Delta {
        Delta::from_acc(&self.sum_around(particles, &pos, usize::MAX))
    }

    fn delta_delete(&self, particles: &ParticleStore, pid: usize) -> Result<Delta> {
        let pos = particles.get(pid)?;
        Ok(Delta::from_acc(&self.sum_around(particles, &pos, pid)).negated())
    }

    fn commit_displace(&mut self, particles: &mut ParticleStore, pid: usize, new_pos: Vec3) -> Result<()> {
        let old_cell = self.cell_of(&particles.get(pid)?);
        let new_cell = self.cell_of(&new_pos);
        if old_cell != new_cell {
            if self.occupancy(new_cell) >= self.capacity {
                return Err(Error::CellOverflow {
                    cell: new_cell,
                    occupancy: self.occupancy(new_cell),
                    capacity: self.capacity,
                });
            }
            self.remove(old_cell, pid)?;
            self.append(new_cell, pid)?;
        }
        particles.set(pid, new_pos)
    }

    fn commit_insert(&mut self, particles: &mut ParticleStore, pos: Vec3) -> Result<usize> {
        let pid = particles.len();
        if pid >= particles.capacity() {
            return Err(Error::StoreFull(particles.capacity()));
        }
        self.append(self.cell_of(&pos), pid)?;
        particles.push(pos)
    }

    fn commit_delete(&mut self, particles: &mut ParticleStore, pid: usize) -> Result<()> {
        particles.check_index(pid)?;
        let last = particles.len() - 1;
        self.remove(self.cell_of(&particles.get(pid)?), pid)?;
        if pid != last {
            self.rename(self.cell_of(&particles.get(last)?), last, pid)?;
        }
        particles.swap_remove(pid).map(|_| ())
    }

    fn rebuild_check(&self, particles: &ParticleStore) -> std::result::Result<(), String> {
        let fresh = self.fresh_occupants(particles);
        compare_cells(
            "cell list",
            self.n_cells(),
            particles.len(),
            |c| self.occupants(c).to_vec(),
            |c| fresh[c].clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_dims_examples() {
        let (t, s) = compute_cell_dims(23.9, 2.5);
        assert_eq!(t, 9);
        assert!((s - 2.6555555555555554).abs() < 1e-12);
        assert!((s - 2.656).abs() < 5e-4);
        let (t, s) = compute_cell_dims(7.0, 2.5);
        assert_eq!(t, 3);
        assert!((s - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(compute_cell_dims(10.0, 2.5), (4, 2.5));
    }

    #[test]
    fn cell_size_never_below_cutoff_for_large_boxes() {
        for i in 0..2000 {
            let l = 7.5 + i as f64 * 0.0137;
            let r = 2.5;
            let (t, s) = compute_cell_dims(l, r);
            assert!(t >= 3);
            assert!(s >= r, "L={l} T={t} S={s}");
            assert!(l / ((t + 1) as f64) < r);
        }
    }

    #[test]
    fn neighbor_table_is_27_distinct_cells() {
        let b = SimBox::new(12.0).unwrap();
        let lj = LennardJones::new(1.0, 1.0, 2.5).unwrap();
        let g = CellGrid::new(b, lj, 48);
        assert_eq!(g.cells_per_dim(), 4);
        for c in 0..g.n_cells() {
            let mut t = g.neighborhood(c).to_vec();
            assert_eq!(t[13] as usize, c);
            t.sort_unstable();
            t.dedup();
            assert_eq!(t.len(), 27);
        }
    }

    #[test]
    fn overflow_names_cell_and_occupancy() {
        let b = SimBox::new(10.0).unwrap();
        let lj = LennardJones::new(1.0, 1.0, 2.5).unwrap();
        let mut g = CellGrid::new(b, lj, 2);
        let p = ParticleStore::from_positions(vec![[0.1; 3], [0.2; 3], [0.3; 3]], 10).unwrap();
        match g.build(&p) {
            Err(Error::CellOverflow {
                cell: 0,
                occupancy: 2,
                capacity: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delete_renames_last_particle() {
        let b = SimBox::new(10.0).unwrap();
        let lj = LennardJones::new(1.0, 1.0, 2.5).unwrap();
        let mut g = CellGrid::new(b, lj, 48);
        let mut p = ParticleStore::from_positions(vec![[0.5; 3], [5.5; 3], [9.5; 3]], 10).unwrap();
        g.build(&p).unwrap();
        g.commit_delete(&mut p, 0).unwrap();
        assert_eq!(g.occupancy(0), 0);
        assert_eq!(g.occupants(g.cell_of(&[9.5; 3])), &[0]);
        assert!(g.rebuild_check(&p).is_ok());
        g.commit_delete(&mut p, 1).unwrap();
        g.commit_delete(&mut p, 0).unwrap();
        assert!(p.is_empty());
        assert!(g.rebuild_check(&p).is_ok());
    }
}
