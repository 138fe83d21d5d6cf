use super::{accumulate, Delta, NeighborStrategy};
use crate::config::StrategyKind;
use crate::error::Result;
use crate::geometry::{SimBox, Vec3};
use crate::particles::ParticleStore;
use crate::potential::LennardJones;
use crate::sum::PairAccumulator;

/// Reference strategy: every move scans every particle in ascending index order.
#[derive(Clone, Debug)]
pub struct AllPairs {
    sim_box: SimBox,
    lj: LennardJones,
}

impl AllPairs {
    pub fn new(sim_box: SimBox, lj: LennardJones) -> Self {
        AllPairs { sim_box, lj }
    }

    fn sum_against(&self, positions: &[Vec3], center: &Vec3, skip: usize) -> PairAccumulator {
        let mut acc = PairAccumulator::default();
        for (j, p) in positions.iter().enumerate() {
            if j == skip {
                continue;
            }
            accumulate(&mut acc, &self.lj, self.sim_box.dist2(center, p));
        }
        acc
    }
}

impl NeighborStrategy for AllPairs {
    fn kind(&self) -> StrategyKind {
        StrategyKind::AllPairs
    }

    fn build(&mut self, _particles: &ParticleStore) -> Result<()> {
        Ok(())
    }

    fn delta_displace(&self, particles: &ParticleStore, pid: usize, new_pos: Vec3) -> Result<Delta> {
        let old_pos = particles.get(pid)?;
        let mut old = PairAccumulator::default();
        let mut new = PairAccumulator::default();
        for (j, p) in particles.positions().iter().enumerate() {
            if j == pid {
                continue;
            }
            accumulate(&mut old, &self.lj, self.sim_box.dist2(&old_pos, p));
            accumulate(&mut new, &self.lj, self.sim_box.dist2(&new_pos, p));
        }
        Ok(Delta::difference(&new, &old))
    }

    fn delta_insert(&self, particles: &ParticleStore, pos: Vec3) -> Delta {
        Delta::from_acc(&self.sum_against(particles.positions(), &pos, usize::MAX))
    }

    fn delta_delete(&self, particles: &ParticleStore, pid: usize) -> Result<Delta> {
        let pos = particles.get(pid)?;
        Ok(Delta::from_acc(&self.sum_against(particles.positions(), &pos, pid)).negated())
    }

    fn commit_displace(&mut self, particles: &mut ParticleStore, pid: usize, new_pos: Vec3) -> Result<()> {
        particles.set(pid, new_pos)
    }

    fn commit_insert(&mut self, particles: &mut ParticleStore, pos: Vec3) -> Result<usize> {
        particles.push(pos)
    }

    fn commit_delete(&mut self, particles: &mut ParticleStore, pid: usize) -> Result<()> {
        particles.swap_remove(pid).map(|_| ())
    }

    fn rebuild_check(&self, _particles: &ParticleStore) -> std::result::Result<(), String> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (AllPairs, ParticleStore) {
        let b = SimBox::new(10.0).unwrap();
        let lj = LennardJones::new(1.0, 1.0, 2.5).unwrap();
        (AllPairs::new(b, lj), ParticleStore::with_capacity(100))
    }

    #[test]
    fn lone_particle_has_no_neighbors() {
        let (s, mut p) = setup();
        assert_eq!(s.delta_insert(&p, [1.0; 3]), Delta::default());
        p.push([1.0; 3]).unwrap();
        assert_eq!(s.delta_displace(&p, 0, [5.0; 3]).unwrap(), Delta::default());
        assert!(s.delta_displace(&p, 1, [5.0; 3]).is_err());
        assert!(s.delta_delete(&p, 3).is_err());
    }

    #[test]
    fn pulling_a_minimum_pair_apart_costs_epsilon() {
        let (s, mut p) = setup();
        let rmin = 2f64.powf(1.0 / 6.0);
        p.push([1.0, 1.0, 1.0]).unwrap();
        p.push([1.0 + rmin, 1.0, 1.0]).unwrap();
        let d = s.delta_displace(&p, 1, [6.0, 6.0, 6.0]).unwrap();
        assert!((d.energy - 1.0).abs() < 1e-14);
        let del = s.delta_delete(&p, 0).unwrap();
        assert!((del.energy - 1.0).abs() < 1e-14);
    }
}
