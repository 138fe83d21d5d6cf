//! Throwaway spatial buckets for from-scratch passes (initial placement,
//! energy recomputation). Kept separate from the strategy grids so audits do
//! not share code with the index they check.

use crate::geometry::Vec3;

const MAX_DIMS: usize = 128;

pub(crate) struct Buckets {
    dims: usize,
    inv: f64,
    cells: Vec<Vec<u32>>,
}

impl Buckets {
    /// Buckets of edge at least `min_width`; `None` when fewer than three fit
    /// per side, where a full scan is needed anyway.
    pub(crate) fn new(side: f64, min_width: f64) -> Option<Self> {
        if !(min_width > 0.0) {
            return None;
        }
        let dims = ((side / min_width).floor() as usize).min(MAX_DIMS);
        if dims < 3 {
            return None;
        }
        Some(Buckets {
            dims,
            inv: dims as f64 / side,
            cells: vec![Vec::new(); dims * dims * dims],
        })
    }

    fn coords(&self, p: &Vec3) -> [usize; 3] {
        p.map(|c| ((c * self.inv) as usize).min(self.dims - 1))
    }

    pub(crate) fn insert(&mut self, p: &Vec3, id: usize) {
        let [x, y, z] = self.coords(p);
        let d = self.dims;
        self.cells[x + d * (y + d * z)].push(id as u32);
    }

    /// Ids in the 27 buckets around `p`, in no particular order.
    pub(crate) fn near(&self, p: &Vec3) -> impl Iterator<Item = u32> + '_ {
        let d = self.dims;
        let [x, y, z] = self.coords(p);
        const OFF: [usize; 3] = [2, 0, 1];
        (0..27).flat_map(move |k| {
            let (dx, dy, dz) = (OFF[k % 3], OFF[(k / 3) % 3], OFF[k / 9]);
            let shift = |c: usize, o: usize| if o == 2 { (c + d - 1) % d } else { (c + o) % d };
            let id = shift(x, dx) + d * (shift(y, dy) + d * shift(z, dz));
            self.cells[id].iter().copied()
        })
    }
}
