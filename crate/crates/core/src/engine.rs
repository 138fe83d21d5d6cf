//! The Monte Carlo loop: proposal, acceptance and bookkeeping.

use crate::buckets::Buckets;
use crate::config::{RunConfig, StrategyKind};
use crate::error::{Error, Result};
use crate::geometry::{SimBox, Vec3};
use crate::init::{random_configuration, MIN_SEPARATION};
use crate::neighbor::{AnyStrategy, Delta, NeighborStrategy};
use crate::particles::ParticleStore;
use crate::potential::{tail_corrections, LennardJones};
use crate::rng::{scale_below, RngStream};
use crate::state::{RunStatistics, SystemState};
use crate::sum::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Displace,
    Insert,
    Delete,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Displace, MoveKind::Insert, MoveKind::Delete];

    pub fn index(self) -> usize {
        match self {
            MoveKind::Displace => 0,
            MoveKind::Insert => 1,
            MoveKind::Delete => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
    /// Zero when the move could not be attempted (empty box).
    pub delta: Delta,
    pub probability: f64,
}

/// Clamps to [0, 1]; NaN maps to 0 so a broken energy never gets accepted.
fn metropolis(x: f64) -> f64 {
    if x >= 1.0 {
        1.0
    } else if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn displace_probability(delta_u: f64, beta: f64) -> f64 {
    metropolis((-beta * delta_u).exp())
}

/// Acceptance of inserting a particle into a box currently holding `n`.
pub fn insert_probability(delta_u: f64, n: usize, volume: f64, beta: f64, mu: f64, lambda: f64) -> f64 {
    let prefactor = volume / (lambda.powi(3) * (n as f64 + 1.0));
    metropolis(prefactor * (beta * (mu - delta_u)).exp())
}

/// Acceptance of deleting one particle from a box holding `n`; `delta_u` is
/// the energy change of the removal.
pub fn delete_probability(delta_u: f64, n: usize, volume: f64, beta: f64, mu: f64, lambda: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let prefactor = lambda.powi(3) * n as f64 / volume;
    metropolis(prefactor * (-beta * (mu + delta_u)).exp())
}

/// Energy and virial of a configuration from scratch: pairs (i, j > i) in
/// ascending lexicographic order, compensated. A near-overlap is an error,
/// not a penalty. Uses temporary buckets when the box is large enough; the
/// result is bit-identical to [`total_energy_brute`].
pub fn total_energy(positions: &[Vec3], sim_box: &SimBox, lj: &LennardJones) -> Result<(f64, f64)> {
    let Some(mut buckets) = Buckets::new(sim_box.side(), lj.r_cut()) else {
        return total_energy_brute(positions, sim_box, lj);
    };
    for (i, p) in positions.iter().enumerate() {
        buckets.insert(p, i);
    }
    let mut u = CompensatedSum::new();
    let mut w = CompensatedSum::new();
    let rc2 = lj.r_cut2();
    let mut partners: Vec<(u32, f64)> = Vec::new();
    for (i, a) in positions.iter().enumerate() {
        partners.clear();
        partners.extend(buckets.near(a).filter(|&j| j as usize > i).filter_map(|j| {
            let r2 = sim_box.dist2(a, &positions[j as usize]);
            (r2 <= rc2).then_some((j, r2))
        }));
        partners.sort_unstable_by_key(|&(j, _)| j);
        for &(j, r2) in &partners {
            let (du, dw) = lj.audited_terms(r2).ok_or(Error::Overlap { i, j: j as usize, r2 })?;
            u.add(du);
            w.add(dw);
        }
    }
    Ok((u.value(), w.value()))
}

/// Reference O(N²) version of [`total_energy`].
pub fn total_energy_brute(positions: &[Vec3], sim_box: &SimBox, lj: &LennardJones) -> Result<(f64, f64)> {
    let mut u = CompensatedSum::new();
    let mut w = CompensatedSum::new();
    let rc2 = lj.r_cut2();
    for (i, a) in positions.iter().enumerate() {
        for (j, b) in positions.iter().enumerate().skip(i + 1) {
            let r2 = sim_box.dist2(a, b);
            if r2 <= rc2 {
                let (du, dw) = lj.audited_terms(r2).ok_or(Error::Overlap { i, j, r2 })?;
                u.add(du);
                w.add(dw);
            }
        }
    }
    Ok((u.value(), w.value()))
}

/// Result of comparing the tracked totals and index with a rebuild.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub step: u64,
    pub energy_tracked: f64,
    pub energy_recomputed: f64,
    pub virial_tracked: f64,
    pub virial_recomputed: f64,
    /// Failure description; `None` when everything matched.
    pub failure: Option<String>,
}

impl AuditReport {
    pub const RELATIVE_TOLERANCE: f64 = 1e-8;
    pub const ABSOLUTE_FLOOR: f64 = 1e-12;

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn energy_drift(&self) -> f64 {
        (self.energy_tracked - self.energy_recomputed).abs()
    }

    fn within(tracked: f64, fresh: f64) -> bool {
        (tracked - fresh).abs() <= (Self::RELATIVE_TOLERANCE * fresh.abs()).max(Self::ABSOLUTE_FLOOR)
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    config: RunConfig,
    sim_box: SimBox,
    lj: LennardJones,
    particles: ParticleStore,
    strategy: AnyStrategy,
    rng: RngStream,
    state: SystemState,
}

impl Simulation {
    /// Validates `config`, places the initial particles with the run's RNG
    /// stream and builds the strategy index.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let sim_box = config.sim_box()?;
        let mut rng = RngStream::new(config.seed);
        let positions = random_configuration(
            config.initial_particles(),
            &sim_box,
            MIN_SEPARATION * config.sigma,
            &mut rng,
        )?;
        Self::from_positions(config, positions, rng)
    }

    /// Starts from given positions (wrapped into the box) and RNG state.
    pub fn from_positions(config: RunConfig, positions: Vec<Vec3>, rng: RngStream) -> Result<Self> {
        config.validate()?;
        let sim_box = config.sim_box()?;
        let positions = positions
            .into_iter()
            .map(|p| sim_box.wrap(p))
            .collect::<Result<Vec<_>>>()?;
        let lj = config.potential()?;
        let (energy, virial) = total_energy(&positions, &sim_box, &lj)?;
        let state = SystemState {
            energy,
            virial,
            ..SystemState::default()
        };
        Self::from_state(config, positions, rng, state)
    }

    /// Reassembles a simulation from saved parts, trusting the saved totals.
    pub fn from_state(config: RunConfig, positions: Vec<Vec3>, rng: RngStream, state: SystemState) -> Result<Self> {
        config.validate()?;
        let sim_box = config.sim_box()?;
        let lj = config.potential()?;
        let capacity = config.particle_capacity().max(positions.len());
        let particles = ParticleStore::from_positions(positions, capacity)?;
        let mut strategy = AnyStrategy::new(config.strategy, sim_box, lj, &config);
        strategy.build(&particles)?;
        Ok(Simulation {
            config,
            sim_box,
            lj,
            particles,
            strategy,
            rng,
            state,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn sim_box(&self) -> &SimBox {
        &self.sim_box
    }

    pub fn potential(&self) -> &LennardJones {
        &self.lj
    }

    pub fn particles(&self) -> &ParticleStore {
        &self.particles
    }

    pub fn strategy(&self) -> &AnyStrategy {
        &self.strategy
    }

    pub fn strategy_kind(&self) -> StrategyKind {
        self.strategy.kind()
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn step_count(&self) -> u64 {
        self.state.step
    }

    pub fn n(&self) -> usize {
        self.particles.len()
    }

    pub fn density(&self) -> f64 {
        self.particles.len() as f64 / self.sim_box.volume()
    }

    /// Tracked pair energy without tail correction.
    pub fn pair_energy(&self) -> f64 {
        self.state.energy
    }

    pub fn virial(&self) -> f64 {
        self.state.virial
    }

    /// Energy as reported: pair energy plus N·u_tail when tails are on.
    pub fn energy(&self) -> f64 {
        let tail = tail_corrections(self.density(), &self.lj, self.config.tail_corrections);
        self.state.energy + self.n() as f64 * tail.energy_per_particle
    }

    /// Virial pressure ρT + W/(3V), plus the tail term when enabled.
    pub fn pressure(&self) -> f64 {
        let rho = self.density();
        let tail = tail_corrections(rho, &self.lj, self.config.tail_corrections);
        rho * self.config.temperature + self.state.virial / (3.0 * self.sim_box.volume()) + tail.pressure
    }

    #[doc(hidden)]
    pub fn strategy_mut(&mut self) -> &mut AnyStrategy {
        &mut self.strategy
    }

    /// Shifts the tracked energy, simulating silent drift.
    #[doc(hidden)]
    pub fn debug_shift_energy(&mut self, du: f64) {
        self.state.energy += du;
    }

    /// Sets the run length (total steps counted from step 0).
    pub fn set_target_steps(&mut self, steps: u64) {
        self.config.steps = steps;
    }

    /// Attempts one move. Every move consumes a fixed number of draws:
    /// displacement 6, insertion 6, deletion 4.
    pub fn step(&mut self) -> Result<MoveOutcome> {
        let outcome = if self.rng.uniform() < self.config.displace_percent {
            self.try_displace()?
        } else if self.rng.uniform() < 0.5 {
            self.try_delete()?
        } else {
            self.try_insert()?
        };
        self.state.counters.record(outcome.kind, outcome.accepted);
        if outcome.accepted {
            self.state.energy += outcome.delta.energy;
            self.state.virial += outcome.delta.virial;
        }
        self.state.step += 1;
        let eq = self.config.equilibration_steps;
        if self.state.step > eq && (self.state.step - eq).is_multiple_of(self.config.sampling_interval) {
            let (n, u, p) = (self.n(), self.energy(), self.pressure());
            self.state.averages.sample(n, u, p);
        }
        Ok(outcome)
    }

    /// Runs `count` further steps without any audits or I/O.
    pub fn run_steps(&mut self, count: u64) -> Result<()> {
        for _ in 0..count {
            self.step()?;
        }
        Ok(())
    }

    fn try_displace(&mut self) -> Result<MoveOutcome> {
        let raw = self.rng.next_u64();
        let u = [self.rng.uniform(), self.rng.uniform(), self.rng.uniform()];
        let a = self.rng.uniform();
        let n = self.particles.len();
        if n == 0 {
            return Ok(rejected(MoveKind::Displace));
        }
        let pid = scale_below(raw, n);
        let l = self.sim_box.side();
        let new_pos = match self.config.max_displacement {
            None => self.sim_box.wrap(u.map(|c| c * l))?,
            Some(d) => {
                let old = self.particles.get(pid)?;
                self.sim_box.wrap([
                    old[0] + (2.0 * u[0] - 1.0) * d,
                    old[1] + (2.0 * u[1] - 1.0) * d,
                    old[2] + (2.0 * u[2] - 1.0) * d,
                ])?
            }
        };
        let delta = self.strategy.delta_displace(&self.particles, pid, new_pos)?;
        let p = displace_probability(delta.energy, self.config.beta());
        let accepted = a < p;
        if accepted {
            self.strategy.commit_displace(&mut self.particles, pid, new_pos)?;
        }
        Ok(MoveOutcome {
            kind: MoveKind::Displace,
            accepted,
            delta,
            probability: p,
        })
    }

    fn try_insert(&mut self) -> Result<MoveOutcome> {
        let l = self.sim_box.side();
        let u = [self.rng.uniform(), self.rng.uniform(), self.rng.uniform()];
        let a = self.rng.uniform();
        let pos = self.sim_box.wrap(u.map(|c| c * l))?;
        let delta = self.strategy.delta_insert(&self.particles, pos);
        let c = &self.config;
        let p = insert_probability(
            delta.energy,
            self.particles.len(),
            self.sim_box.volume(),
            c.beta(),
            c.chemical_potential,
            c.lambda,
        );
        let accepted = a < p;
        if accepted {
            self.strategy.commit_insert(&mut self.particles, pos)?;
        }
        Ok(MoveOutcome {
            kind: MoveKind::Insert,
            accepted,
            delta,
            probability: p,
        })
    }

    fn try_delete(&mut self) -> Result<MoveOutcome> {
        let raw = self.rng.next_u64();
        let a = self.rng.uniform();
        let n = self.particles.len();
        if n == 0 {
            return Ok(rejected(MoveKind::Delete));
        }
        let pid = scale_below(raw, n);
        let delta = self.strategy.delta_delete(&self.particles, pid)?;
        let c = &self.config;
        let p = delete_probability(
            delta.energy,
            n,
            self.sim_box.volume(),
            c.beta(),
            c.chemical_potential,
            c.lambda,
        );
        let accepted = a < p;
        if accepted {
            self.strategy.commit_delete(&mut self.particles, pid)?;
        }
        Ok(MoveOutcome {
            kind: MoveKind::Delete,
            accepted,
            delta,
            probability: p,
        })
    }

    /// Recomputes energy and virial from scratch and checks the strategy
    /// index against a fresh binning.
    pub fn audit(&self) -> AuditReport {
        let mut report = AuditReport {
            step: self.state.step,
            energy_tracked: self.state.energy,
            energy_recomputed: f64::NAN,
            virial_tracked: self.state.virial,
            virial_recomputed: f64::NAN,
            failure: None,
        };
        match total_energy(self.particles.positions(), &self.sim_box, &self.lj) {
            Err(e) => report.failure = Some(format!("recomputation failed: {e}")),
            Ok((u, w)) => {
                report.energy_recomputed = u;
                report.virial_recomputed = w;
                if !AuditReport::within(self.state.energy, u) {
                    report.failure = Some(format!(
                        "energy drift: tracked {:e}, recomputed {:e}",
                        self.state.energy, u
                    ));
                } else if !AuditReport::within(self.state.virial, w) {
                    report.failure = Some(format!(
                        "virial drift: tracked {:e}, recomputed {:e}",
                        self.state.virial, w
                    ));
                }
            }
        }
        if report.failure.is_none() {
            if let Err(msg) = self.strategy.rebuild_check(&self.particles) {
                report.failure = Some(format!("index mismatch: {msg}"));
            }
        }
        report
    }

    /// Replaces the tracked totals with a fresh recomputation.
    pub fn resync_energy(&mut self) -> Result<()> {
        let (u, w) = total_energy(self.particles.positions(), &self.sim_box, &self.lj)?;
        self.state.energy = u;
        self.state.virial = w;
        Ok(())
    }

    pub fn statistics(&self) -> RunStatistics {
        let a = &self.state.averages;
        RunStatistics {
            steps: self.state.step,
            samples: a.samples,
            mean_n: a.mean_n(),
            variance_n: a.variance_n(),
            mean_energy: a.mean_energy(),
            mean_pressure: a.mean_pressure(),
            acceptance: MoveKind::ALL.map(|k| self.state.counters.ratio(k)),
            final_n: self.n(),
            final_energy: self.energy(),
        }
    }
}

fn rejected(kind: MoveKind) -> MoveOutcome {
    MoveOutcome {
        kind,
        accepted: false,
        delta: Delta::default(),
        probability: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BoxSpec;

    #[test]
    fn metropolis_clamps_and_rejects_nan() {
        assert_eq!(displace_probability(-1.0, 1.0), 1.0);
        assert_eq!(displace_probability(0.0, 1.0), 1.0);
        assert!((displace_probability(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert_eq!(displace_probability(f64::NAN, 1.0), 0.0);
        assert_eq!(displace_probability(1e200, 1.0), 0.0);
    }

    #[test]
    fn insertion_and_deletion_are_reciprocal() {
        // For a pair of states N and N+1 the two acceptance ratios multiply to one
        // before clamping; check the unclamped region.
        let (v, beta, mu, lambda) = (1000.0, 0.5, -3.0, 1.0);
        let n = 37;
        let du = 0.7;
        let pi = insert_probability(du, n, v, beta, mu, lambda);
        let pd = delete_probability(-du, n + 1, v, beta, mu, lambda);
        assert!(pi < 1.0 || pd < 1.0);
        let raw_i = v / (lambda.powi(3) * (n as f64 + 1.0)) * (beta * (mu - du)).exp();
        let raw_d = lambda.powi(3) * (n as f64 + 1.0) / v * (-beta * (mu - du)).exp();
        assert!((raw_i * raw_d - 1.0).abs() < 1e-14);
        assert_eq!(pi, metropolis(raw_i));
        assert_eq!(pd, metropolis(raw_d));
        assert_eq!(delete_probability(0.0, 0, v, beta, mu, lambda), 0.0);
    }

    #[test]
    fn ideal_gas_probabilities() {
        // e^{βμ}V = 600 with Λ = 1: insertion into N = 599 is exactly 1.
        let mu = 0.6f64.ln();
        let p = insert_probability(0.0, 599, 1000.0, 1.0, mu, 1.0);
        assert!((p - 1.0).abs() < 1e-12);
        let q = delete_probability(0.0, 300, 1000.0, 1.0, mu, 1.0);
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bucketed_energy_is_bit_identical_to_brute_force() {
        for (n, side) in [(300usize, 7.0), (2000, 15.0), (50, 4.0)] {
            let b = SimBox::new(side).unwrap();
            let lj = LennardJones::new(1.0, 1.0, 2.0).unwrap();
            let pts = random_configuration(n, &b, 0.85, &mut RngStream::new(n as u64)).unwrap();
            assert_eq!(
                total_energy(&pts, &b, &lj).unwrap(),
                total_energy_brute(&pts, &b, &lj).unwrap()
            );
        }
    }

    #[test]
    fn total_energy_of_minimum_pair() {
        let b = SimBox::new(10.0).unwrap();
        let lj = LennardJones::new(1.0, 1.0, 2.5).unwrap();
        let r = 2f64.powf(1.0 / 6.0);
        let (u, w) = total_energy(&[[1.0, 1.0, 1.0], [1.0 + r, 1.0, 1.0]], &b, &lj).unwrap();
        assert!((u + 1.0).abs() < 1e-14);
        assert!(w.abs() < 1e-12);
        assert!(matches!(
            total_energy(&[[1.0; 3], [1.0; 3]], &b, &lj),
            Err(Error::Overlap { .. })
        ));
    }

    fn small_config(kind: StrategyKind) -> RunConfig {
        let mut c = RunConfig::new(
            2.0,
            -1.5,
            BoxSpec::Particles {
                count: 200,
                density: 0.6,
            },
        );
        c.strategy = kind;
        c.seed = 17;
        c
    }

    #[test]
    fn tracked_energy_matches_audit() {
        for kind in StrategyKind::ALL {
            let mut sim = Simulation::new(small_config(kind)).unwrap();
            sim.run_steps(5000).unwrap();
            let a = sim.audit();
            assert!(a.passed(), "{kind}: {:?}", a.failure);
            assert_eq!(sim.step_count(), 5000);
            assert_eq!(sim.state().averages.samples, 5000);
        }
    }

    #[test]
    fn strategies_follow_identical_trajectories() {
        let mut sims: Vec<_> = StrategyKind::ALL
            .iter()
            .map(|&k| Simulation::new(small_config(k)).unwrap())
            .collect();
        for _ in 0..3000 {
            let outs: Vec<_> = sims.iter_mut().map(|s| s.step().unwrap()).collect();
            for o in &outs[1..] {
                assert_eq!(o.kind, outs[0].kind);
                assert_eq!(o.accepted, outs[0].accepted);
            }
        }
        let n0 = sims[0].n();
        for s in &sims[1..] {
            assert_eq!(s.n(), n0);
            assert_eq!(s.rng(), sims[0].rng());
        }
    }

    #[test]
    fn empty_box_moves_are_rejected_but_counted() {
        let mut c = RunConfig::new(1.0, -50.0, BoxSpec::Length(10.0));
        c.displace_percent = 0.5;
        let mut sim = Simulation::new(c).unwrap();
        sim.run_steps(1000).unwrap();
        let ctr = sim.state().counters;
        assert_eq!(ctr.attempted.iter().sum::<u64>(), 1000);
        assert_eq!(ctr.accepted[0], 0);
        assert_eq!(ctr.accepted[2], 0);
        assert!(ctr.attempted[0] > 0 && ctr.attempted[2] > 0);
    }

    #[test]
    fn equilibration_and_sampling_interval() {
        let mut c = small_config(StrategyKind::CellList);
        c.equilibration_steps = 100;
        c.sampling_interval = 7;
        let mut sim = Simulation::new(c).unwrap();
        sim.run_steps(800).unwrap();
        assert_eq!(sim.state().averages.samples, 100);
    }

    #[test]
    fn local_displacement_keeps_positions_in_box() {
        let mut c = small_config(StrategyKind::Microcell);
        c.max_displacement = Some(0.4);
        let mut sim = Simulation::new(c).unwrap();
        sim.run_steps(3000).unwrap();
        let l = sim.sim_box().side();
        assert!(sim
            .particles()
            .positions()
            .iter()
            .all(|p| p.iter().all(|&x| (0.0..l).contains(&x))));
        assert!(sim.audit().passed());
    }

    #[test]
    fn corrupted_index_fails_audit() {
        let mut sim = Simulation::new(small_config(StrategyKind::CellList)).unwrap();
        sim.strategy_mut().debug_overwrite_slot(0, 0, 9999);
        assert!(!sim.audit().passed());
        let mut sim = Simulation::new(small_config(StrategyKind::AllPairs)).unwrap();
        sim.state.energy += 1.0;
        assert!(sim.audit().failure.unwrap().contains("energy drift"));
    }
}
