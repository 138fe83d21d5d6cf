//! Microcell list: the box is cut into cells of edge σ (the last cell along
//! each axis absorbs the remainder and may be thinner). A particle's cell is
//! the integer part of its coordinates in σ units, a cell holds at most a
//! handful of particles, and slots are stored slot-major: the first occupant
//! of every cell, then every second occupant, and so on.
//!
//! A move scans a cube of cells around the particle's cell. Per axis the cube
//! spans `ceil(r_cut/σ)` cells on each side; when it wraps across the thin
//! boundary cell one more cell is added on that side so the cutoff sphere is
//! always covered. Cells of the cube whose slab distance from the evaluated
//! point exceeds `r_cut` are skipped; they cannot hold a pair inside the
//! cutoff, so the sum is unchanged.

use super::{accumulate, compare_cells, Delta, NeighborStrategy};
use crate::config::StrategyKind;
use crate::error::{Error, Result};
use crate::geometry::{SimBox, Vec3};
use crate::particles::ParticleStore;
use crate::potential::LennardJones;
use crate::sum::PairAccumulator;

/// Nominal cells per axis of the search cube for full-width cells.
pub fn neighborhood_extent(r_cut: f64, sigma: f64) -> usize {
    2 * (r_cut / sigma).ceil() as usize + 1
}

#[derive(Clone, Debug)]
pub struct MicrocellGrid {
    sim_box: SimBox,
    lj: LennardJones,
    dims: usize,
    total: usize,
    capacity: usize,
    inv_sigma: f64,
    occupancy: Vec<u8>,
    /// Slot-major: occupant `k` of cell `c` is at `k * total + c`. Each
    /// cell's occupants are kept in ascending index order.
    slots: Vec<u32>,
    // Per-axis search span for every center index, flattened, with the total
    // width of the cells strictly between the center and each span cell
    // going down and going up.
    span_start: Vec<u32>,
    span_len: Vec<u32>,
    span_cells: Vec<u32>,
    span_down: Vec<f64>,
    span_up: Vec<f64>,
    // Skip threshold: r_cut² plus a rounding margin.
    prune_limit: f64,
    peak_occupancy: usize,
}

impl MicrocellGrid {
    pub fn new(sim_box: SimBox, lj: LennardJones, capacity: usize) -> Self {
        let sigma = lj.sigma();
        let dims = ((sim_box.side() / sigma).ceil() as usize).max(1);
        let total = dims * dims * dims;
        let spans = axis_spans(dims, sigma, sim_box.side(), lj.r_cut());
        MicrocellGrid {
            sim_box,
            lj,
            dims,
            total,
            capacity,
            inv_sigma: 1.0 / sigma,
            occupancy: vec![0; total],
            slots: vec![0; total * capacity],
            span_start: spans.start,
            span_len: spans.len,
            span_cells: spans.cells,
            span_down: spans.down,
            span_up: spans.up,
            prune_limit: lj.r_cut2() * (1.0 + 1e-9),
            peak_occupancy: 0,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_cells(&self) -> usize {
        self.total
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Highest occupancy any cell has reached since the grid was built.
    pub fn peak_occupancy(&self) -> usize {
        self.peak_occupancy
    }

    /// Width of cell `i` along any axis (σ except possibly the last one).
    pub fn cell_width(&self, i: usize) -> f64 {
        width(i, self.dims, self.lj.sigma(), self.sim_box.side())
    }

    #[inline]
    fn axis_index(&self, c: f64) -> usize {
        ((c * self.inv_sigma) as usize).min(self.dims - 1)
    }

    /// Integer part of each coordinate (σ units), clamped into the grid.
    #[inline]
    pub fn cell_coords(&self, p: &Vec3) -> [usize; 3] {
        [self.axis_index(p[0]), self.axis_index(p[1]), self.axis_index(p[2])]
    }

    #[inline]
    pub fn linear_id(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.dims * (y + self.dims * z)
    }

    #[inline]
    pub fn cell_of(&self, p: &Vec3) -> usize {
        self.linear_id(self.cell_coords(p))
    }

    /// Position of occupant `k` of `cell` in the slot array.
    #[inline]
    pub fn slot_index(&self, cell: usize, k: usize) -> usize {
        k * self.total + cell
    }

    pub fn occupancy(&self, cell: usize) -> usize {
        self.occupancy[cell] as usize
    }

    pub fn occupants(&self, cell: usize) -> Vec<u32> {
        (0..self.occupancy(cell))
            .map(|k| self.slots[self.slot_index(cell, k)])
            .collect()
    }

    pub fn raw_slots(&self) -> &[u32] {
        &self.slots
    }

    #[inline]
    fn span(&self, axis_center: usize) -> &[u32] {
        let s = self.span_start[axis_center] as usize;
        &self.span_cells[s..s + self.span_len[axis_center] as usize]
    }

    /// Cells scanned around `center`, x fastest, then y, then z.
    pub fn neighborhood(&self, center: [usize; 3]) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for &z in self.span(center[2]) {
            for &y in self.span(center[1]) {
                for &x in self.span(center[0]) {
                    out.push([x as usize, y as usize, z as usize]);
                }
            }
        }
        out
    }

    /// Squared distances from coordinate `x` to the slabs of the span cells
    /// around `axis_center`.
    #[inline(always)]
    fn axis_gaps(&self, axis_center: usize, x: f64, out: &mut [f64]) {
        let s = self.span_start[axis_center] as usize;
        let lo = (x - axis_center as f64 * self.lj.sigma()).max(0.0);
        let hi = (axis_center as f64 * self.lj.sigma() + self.cell_width(axis_center) - x).max(0.0);
        for (k, g) in out.iter_mut().enumerate() {
            let i = s + k;
            *g = if self.span_cells[i] as usize == axis_center {
                0.0
            } else {
                let d = (self.span_down[i] + lo).min(self.span_up[i] + hi);
                d * d
            };
        }
    }

    /// Calls `f(base, xs)` for each row of the search cube around `center`
    /// that comes within `r_cut` of it; the row's cells are `base + x` for
    /// `x` in `xs`. Rows come in cube order (y, then z). Along a row the slab
    /// distance falls toward the center cell and rises after it, so the run
    /// from the first to the last cell in range covers every cell in range.
    #[inline(always)]
    fn visit_rows(&self, center: &Vec3, mut f: impl FnMut(usize, &[u32])) {
        const INLINE: usize = 64;
        let [cx, cy, cz] = self.cell_coords(center);
        let (xs, ys, zs) = (self.span(cx), self.span(cy), self.span(cz));
        let mut stack = [[0.0f64; INLINE]; 3];
        let mut heap: Vec<Vec<f64>>;
        let [gx, gy, gz]: [&mut [f64]; 3] = if xs.len().max(ys.len()).max(zs.len()) <= INLINE {
            let [a, b, c] = &mut stack;
            [&mut a[..xs.len()], &mut b[..ys.len()], &mut c[..zs.len()]]
        } else {
            heap = vec![vec![0.0; xs.len()], vec![0.0; ys.len()], vec![0.0; zs.len()]];
            let (a, rest) = heap.split_at_mut(1);
            let (b, c) = rest.split_at_mut(1);
            [&mut a[0][..], &mut b[0][..], &mut c[0][..]]
        };
        self.axis_gaps(cx, center[0], gx);
        self.axis_gaps(cy, center[1], gy);
        self.axis_gaps(cz, center[2], gz);
        let limit = self.prune_limit;
        for (&z, &dz) in zs.iter().zip(gz.iter()) {
            if dz > limit {
                continue;
            }
            for (&y, &dy) in ys.iter().zip(gy.iter()) {
                let rem = limit - (dz + dy);
                if rem < 0.0 {
                    continue;
                }
                // The center cell has gap 0, so both scans find something.
                let first = gx.iter().position(|&g| g <= rem).unwrap_or(0);
                let last = gx.iter().rposition(|&g| g <= rem).unwrap_or(0);
                let base = self.dims * (y as usize + self.dims * z as usize);
                f(base, &xs[first..=last]);
            }
        }
    }

    /// Cells actually scanned when evaluating a particle at `p`.
    pub fn visited_cells(&self, p: &Vec3) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_rows(p, |base, xs| out.extend(xs.iter().map(|&x| base + x as usize)));
        out
    }

    /// Calls `f` on the particles of the visited cells, gathered in batches
    /// so the per-cell work is nearly branch-free.
    #[inline(always)]
    fn visit_neighborhood(&self, center: &Vec3, mut f: impl FnMut(&[u32])) {
        const BATCH: usize = 512;
        let mut buf = [0u32; BATCH];
        let mut n = 0;
        let cap = self.capacity;
        let chunk = (BATCH / cap).max(1);
        let (occupancy, slots, total) = (&self.occupancy[..], &self.slots[..], self.total);
        self.visit_rows(center, |base, xs| {
            for part in xs.chunks(chunk) {
                if n + part.len() * cap > BATCH {
                    f(&buf[..n]);
                    n = 0;
                }
                for &x in part {
                    let c = base + x as usize;
                    let occ = occupancy[c] as usize;
                    buf[n] = slots[c];
                    n += (occ != 0) as usize;
                    for k in 1..occ {
                        buf[n] = slots[k * total + c];
                        n += 1;
                    }
                }
            }
        });
        f(&buf[..n]);
    }

    fn sum_around(&self, particles: &ParticleStore, center: &Vec3, skip: usize) -> PairAccumulator {
        let pos = particles.positions();
        let mut acc = PairAccumulator::default();
        self.visit_neighborhood(center, |ids| {
            for &j in ids {
                let j = j as usize;
                if j != skip {
                    accumulate(&mut acc, &self.lj, self.sim_box.dist2(center, &pos[j]));
                }
            }
        });
        acc
    }

    fn overflow(&self, cell: usize) -> Error {
        Error::CellOverflow {
            cell,
            occupancy: self.occupancy(cell),
            capacity: self.capacity,
        }
    }

    fn append(&mut self, cell: usize, pid: usize) -> Result<()> {
        let occ = self.occupancy(cell);
        if occ >= self.capacity {
            return Err(self.overflow(cell));
        }
        let mut k = occ;
        while k > 0 && self.slots[self.slot_index(cell, k - 1)] as usize > pid {
            let (dst, src) = (self.slot_index(cell, k), self.slot_index(cell, k - 1));
            self.slots[dst] = self.slots[src];
            k -= 1;
        }
        let idx = self.slot_index(cell, k);
        self.slots[idx] = pid as u32;
        self.occupancy[cell] += 1;
        self.peak_occupancy = self.peak_occupancy.max(occ + 1);
        Ok(())
    }

    fn find_slot(&self, cell: usize, pid: usize) -> Result<usize> {
        (0..self.occupancy(cell))
            .find(|&k| self.slots[self.slot_index(cell, k)] as usize == pid)
            .ok_or_else(|| Error::Corrupt(format!("particle {pid} missing from microcell {cell}")))
    }

    fn remove(&mut self, cell: usize, pid: usize) -> Result<()> {
        let occ = self.occupancy(cell);
        // Lone occupant: the counter is all that changes.
        if occ == 1 && self.slots[cell] as usize == pid {
            self.occupancy[cell] = 0;
            return Ok(());
        }
        let k = self.find_slot(cell, pid)?;
        for m in k + 1..occ {
            let (dst, src) = (self.slot_index(cell, m - 1), self.slot_index(cell, m));
            self.slots[dst] = self.slots[src];
        }
        self.occupancy[cell] -= 1;
        Ok(())
    }

    fn rename(&mut self, cell: usize, from: usize, to: usize) -> Result<()> {
        self.remove(cell, from)?;
        self.append(cell, to)
    }

    pub(crate) fn debug_overwrite_slot(&mut self, cell: usize, k: usize, value: u32) {
        let idx = self.slot_index(cell, k);
        self.slots[idx] = value;
    }
}

fn width(i: usize, dims: usize, sigma: f64, side: f64) -> f64 {
    if i + 1 < dims {
        sigma
    } else {
        side - (dims - 1) as f64 * sigma
    }
}

struct AxisSpans {
    start: Vec<u32>,
    len: Vec<u32>,
    cells: Vec<u32>,
    down: Vec<f64>,
    up: Vec<f64>,
}

/// For each center index, the periodic run of cells whose slab lies within
/// `r_cut` of the center cell's slab, ordered by offset. A cell is included
/// when the cells strictly between it and the center are narrower than
/// `r_cut` in total.
fn axis_spans(dims: usize, sigma: f64, side: f64, r_cut: f64) -> AxisSpans {
    let w = |i: usize| width(i, dims, sigma, side);
    let mut out = AxisSpans {
        start: Vec::with_capacity(dims),
        len: Vec::with_capacity(dims),
        cells: Vec::new(),
        down: Vec::new(),
        up: Vec::new(),
    };
    for c in 0..dims {
        let reach = |step: usize| {
            let mut count = 0;
            let mut gap = 0.0;
            while count + 1 < dims && gap < r_cut {
                count += 1;
                gap += w((c + step * count) % dims);
            }
            count
        };
        let down = reach(dims - 1);
        let up = reach(1);
        let len = (down + up + 1).min(dims);
        out.start.push(out.cells.len() as u32);
        out.len.push(len as u32);
        let first = (c + dims - down) % dims;
        for k in 0..len {
            let t = (first + k) % dims;
            out.cells.push(t as u32);
            // Widths strictly between c and t walking down, then walking up.
            let steps_down = (c + dims - t) % dims;
            let steps_up = (t + dims - c) % dims;
            out.down.push((1..steps_down).map(|m| w((c + dims - m) % dims)).sum());
            out.up.push((1..steps_up).map(|m| w((c + m) % dims)).sum());
        }
    }
    out
}

impl NeighborStrategy for MicrocellGrid {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Microcell
    }

    fn build(&mut self, particles: &ParticleStore) -> Result<()> {
        self.occupancy.iter_mut().for_each(|o| *o = 0);
        self.peak_occupancy = 0;
        for (i, p) in particles.positions().iter().enumerate() {
            self.append(self.cell_of(p), i)?;
        }
        Ok(())
    }

    fn delta_displace(&self, particles: &ParticleStore, pid: usize, new_pos: Vec3) -> Result<Delta> {
        let old_pos = particles.get(pid)?;
        let old = self.sum_around(particles, &old_pos, pid);
        let new = self.sum_around(particles, &new_pos, pid);
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
                return Err(self.overflow(new_cell));
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
        let mut fresh = vec![Vec::new(); self.total];
        for (i, p) in particles.positions().iter().enumerate() {
            fresh[self.cell_of(p)].push(i as u32);
        }
        if let Some(c) = fresh.iter().position(|f| f.len() > self.capacity) {
            return Err(format!(
                "microcell {c} would hold {} > {} particles",
                fresh[c].len(),
                self.capacity
            ));
        }
        compare_cells(
            "microcell",
            self.total,
            particles.len(),
            |c| self.occupants(c),
            |c| fresh[c].clone(),
        )
    }
}
