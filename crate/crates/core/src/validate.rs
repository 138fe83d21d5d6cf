//! Self-checks behind `sim validate` and the acceptance suite: strategy
//! equivalence, grid consistency, neighborhood coverage and the ideal gas.

use crate::config::{BoxSpec, RunConfig, StrategyKind, DEFAULT_DENSITY};
use crate::engine::Simulation;
use crate::error::Result;
use crate::geometry::{SimBox, Vec3};
use crate::init::{random_configuration, MIN_SEPARATION};
use crate::neighbor::{AnyStrategy, CellGrid, Delta, MicrocellGrid, NeighborStrategy};
use crate::particles::ParticleStore;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Largest relative disagreement of a grid strategy with all-pairs, per
/// move type, over a batch of uncommitted proposals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquivalenceReport {
    pub particles: usize,
    pub proposals: usize,
    pub max_rel: [f64; 3],
}

impl EquivalenceReport {
    pub fn worst(&self) -> f64 {
        self.max_rel.iter().cloned().fold(0.0, f64::max)
    }
}

fn rel(a: &Delta, reference: &Delta) -> f64 {
    let e = (a.energy - reference.energy).abs() / reference.energy.abs().max(1.0);
    let w = (a.virial - reference.virial).abs() / reference.virial.abs().max(1.0);
    e.max(w)
}

/// Places `n` particles in a box sized for `density`, then evaluates
/// `proposals` random moves of each type with all three strategies.
pub fn strategy_equivalence(
    config: &RunConfig,
    n: usize,
    density: f64,
    proposals: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let mut cfg = config.clone();
    cfg.box_spec = BoxSpec::Particles { count: n, density };
    cfg.validate()?;
    let sim_box = cfg.sim_box()?;
    let lj = cfg.potential()?;
    let mut rng = RngStream::new(seed);
    let positions = random_configuration(n, &sim_box, MIN_SEPARATION * cfg.sigma, &mut rng)?;
    let particles = ParticleStore::from_positions(positions, cfg.particle_capacity())?;
    let mut strategies: Vec<AnyStrategy> = StrategyKind::ALL
        .iter()
        .map(|&k| AnyStrategy::new(k, sim_box, lj, &cfg))
        .collect();
    for s in &mut strategies {
        s.build(&particles)?;
    }
    let l = sim_box.side();
    let mut report = EquivalenceReport {
        particles: n,
        proposals,
        ..Default::default()
    };
    let uniform_pos = |rng: &mut RngStream| -> Result<Vec3> {
        sim_box.wrap([rng.uniform() * l, rng.uniform() * l, rng.uniform() * l])
    };
    for i in 0..proposals {
        let pid = rng.below(n);
        // Alternate far jumps with short hops that stay near the old cell.
        let new_pos = if i % 2 == 0 {
            uniform_pos(&mut rng)?
        } else {
            let old = particles.get(pid)?;
            sim_box.wrap([
                old[0] + rng.uniform() - 0.5,
                old[1] + rng.uniform() - 0.5,
                old[2] + rng.uniform() - 0.5,
            ])?
        };
        let ins = uniform_pos(&mut rng)?;
        let del = rng.below(n);
        let mut deltas = Vec::with_capacity(3);
        for s in &strategies {
            deltas.push([
                s.delta_displace(&particles, pid, new_pos)?,
                s.delta_insert(&particles, ins),
                s.delta_delete(&particles, del)?,
            ]);
        }
        for d in &deltas[1..] {
            for k in 0..3 {
                report.max_rel[k] = report.max_rel[k].max(rel(&d[k], &deltas[0][k]));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConsistencyReport {
    pub strategy: StrategyKind,
    pub steps: u64,
    pub committed: u64,
    pub checks: usize,
    pub peak_occupancy: Option<usize>,
    pub failure: Option<String>,
}

/// Runs `config` with `kind` until `committed` moves have been accepted,
/// comparing the index with a fresh binning every `check_every` commits and
/// at the end.
pub fn grid_consistency(
    config: &RunConfig,
    kind: StrategyKind,
    committed: u64,
    check_every: u64,
) -> Result<GridConsistencyReport> {
    let mut cfg = config.clone();
    cfg.strategy = kind;
    let mut sim = Simulation::new(cfg)?;
    let mut report = GridConsistencyReport {
        strategy: kind,
        steps: 0,
        committed: 0,
        checks: 0,
        peak_occupancy: None,
        failure: None,
    };
    let mut next_check = check_every.max(1);
    loop {
        let done = sim.state().counters.total_accepted();
        if done >= next_check || done >= committed {
            report.checks += 1;
            if let Err(msg) = sim.strategy().rebuild_check(sim.particles()) {
                report.failure = Some(format!("after {done} commits: {msg}"));
                break;
            }
            next_check += check_every.max(1);
            if done >= committed {
                break;
            }
        }
        if let Err(e) = sim.step() {
            report.failure = Some(format!("after {done} commits: {e}"));
            break;
        }
    }
    report.steps = sim.step_count();
    report.committed = sim.state().counters.total_accepted();
    report.peak_occupancy = sim.strategy().as_microcell().map(MicrocellGrid::peak_occupancy);
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageReport {
    pub trials: usize,
    pub cell_list_misses: usize,
    pub microcell_misses: usize,
}

/// Draws random (particle, offset) pairs with `|offset| <= r_cut` and checks
/// that both grids' search neighborhoods of the particle's cell contain the
/// cell of the displaced point. A quarter of the offsets sit on the sphere.
pub fn coverage(side: f64, r_cut: f64, trials: usize, seed: u64) -> Result<CoverageReport> {
    let sim_box = SimBox::new(side)?;
    let lj = crate::potential::LennardJones::new(1.0, 1.0, r_cut)?;
    let cells = CellGrid::new(sim_box, lj, 1);
    let micro = MicrocellGrid::new(sim_box, lj, 1);
    let mut rng = RngStream::new(seed);
    let mut report = CoverageReport {
        trials,
        ..Default::default()
    };
    for t in 0..trials {
        let p = sim_box.wrap([rng.uniform() * side, rng.uniform() * side, rng.uniform() * side])?;
        let dir = loop {
            let v = [
                2.0 * rng.uniform() - 1.0,
                2.0 * rng.uniform() - 1.0,
                2.0 * rng.uniform() - 1.0,
            ];
            let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if n2 > 1e-6 && n2 <= 1.0 {
                let n = n2.sqrt();
                break v.map(|c| c / n);
            }
        };
        let radius = if t % 4 == 0 {
            r_cut
        } else {
            r_cut * rng.uniform().cbrt()
        };
        let q = sim_box.wrap([p[0] + radius * dir[0], p[1] + radius * dir[1], p[2] + radius * dir[2]])?;
        if sim_box.dist2(&p, &q) > lj.r_cut2() {
            continue;
        }
        let target = cells.cell_of(&q) as u32;
        if !cells.neighborhood(cells.cell_of(&p)).contains(&target) {
            report.cell_list_misses += 1;
        }
        // The cells a microcell move really scans, after pruning.
        if !micro.visited_cells(&p).contains(&micro.cell_of(&q)) {
            report.microcell_misses += 1;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealGasReport {
    pub expected_n: f64,
    pub mean_n: f64,
    pub variance_ratio: f64,
    pub samples: u64,
}

/// ε = 0 fluid whose ⟨N⟩ must equal e^{βμ}V/Λ³ with Poisson fluctuations.
pub fn ideal_gas_config(side: f64, expected_n: f64, steps: u64, equilibration: u64, seed: u64) -> RunConfig {
    let volume = side.powi(3);
    let mut c = RunConfig::new(1.0, (expected_n / volume).ln(), BoxSpec::Length(side));
    c.epsilon = 0.0;
    c.steps = equilibration + steps;
    c.equilibration_steps = equilibration;
    c.seed = seed;
    c.strategy = StrategyKind::CellList;
    c.r_cut = (c.r_cut).min(0.5 * side);
    c
}

pub fn ideal_gas(config: &RunConfig) -> Result<IdealGasReport> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run_steps(config.steps)?;
    let a = &sim.state().averages;
    let expected = (config.beta() * config.chemical_potential).exp() * sim.sim_box().volume() / config.lambda.powi(3);
    Ok(IdealGasReport {
        expected_n: expected,
        mean_n: a.mean_n(),
        variance_ratio: a.variance_n() / a.mean_n(),
        samples: a.samples,
    })
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub proposals: usize,
    pub committed_moves: u64,
    pub coverage_trials: usize,
    pub coverage_cutoffs: Vec<f64>,
    pub ideal_gas_steps: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            proposals: 10_000,
            committed_moves: 100_000,
            coverage_trials: 100_000,
            coverage_cutoffs: vec![2.5, 2.75, 3.0, 3.75, 4.25],
            ideal_gas_steps: 2_000_000,
        }
    }
}

pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;
pub const IDEAL_GAS_MEAN_TOLERANCE: f64 = 0.02;
pub const IDEAL_GAS_VARIANCE_TOLERANCE: f64 = 0.05;

/// Runs every suite against `config` and returns one result per check.
pub fn run_all(config: &RunConfig, opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut push = |name: String, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        out.push(CheckResult { name, passed, detail });
    };

    let density = match config.box_spec {
        BoxSpec::Particles { density, .. } => density,
        BoxSpec::Length(_) => DEFAULT_DENSITY,
    };
    let n = match config.box_spec {
        BoxSpec::Particles { count, .. } => count,
        BoxSpec::Length(l) => (density * l.powi(3)).round() as usize,
    };
    push(
        "strategy equivalence".into(),
        strategy_equivalence(config, n, density, opts.proposals, config.seed).map(|r| {
            (
                r.worst() <= EQUIVALENCE_TOLERANCE,
                format!(
                    "N={} max rel diff displace {:.2e} insert {:.2e} delete {:.2e}",
                    r.particles, r.max_rel[0], r.max_rel[1], r.max_rel[2]
                ),
            )
        }),
    );

    for kind in [StrategyKind::CellList, StrategyKind::Microcell] {
        push(
            format!("grid consistency ({kind})"),
            grid_consistency(config, kind, opts.committed_moves, 10_000).map(|r| {
                let occ = r
                    .peak_occupancy
                    .map(|o| format!(", peak occupancy {o}"))
                    .unwrap_or_default();
                match r.failure {
                    Some(f) => (false, f),
                    None => (
                        true,
                        format!("{} commits in {} steps, {} checks{occ}", r.committed, r.steps, r.checks),
                    ),
                }
            }),
        );
    }

    for &rc in &opts.coverage_cutoffs {
        let side = (config.box_length()).max(2.0 * rc + 0.37);
        push(
            format!("coverage r_cut={rc}"),
            coverage(side, rc, opts.coverage_trials, config.seed ^ rc.to_bits()).map(|r| {
                (
                    r.cell_list_misses == 0 && r.microcell_misses == 0,
                    format!(
                        "L={side:.4} {} trials, misses cell_list {} microcell {}",
                        r.trials, r.cell_list_misses, r.microcell_misses
                    ),
                )
            }),
        );
    }

    let ig = ideal_gas_config(10.0, 600.0, opts.ideal_gas_steps, 100_000, config.seed);
    push(
        "ideal gas".into(),
        ideal_gas(&ig).map(|r| {
            let mean_err = (r.mean_n - r.expected_n).abs() / r.expected_n;
            let var_err = (r.variance_ratio - 1.0).abs();
            (
                mean_err <= IDEAL_GAS_MEAN_TOLERANCE && var_err <= IDEAL_GAS_VARIANCE_TOLERANCE,
                format!(
                    "<N>={:.2} (expected {:.1}), Var/<N>={:.4}, {} samples",
                    r.mean_n, r.expected_n, r.variance_ratio, r.samples
                ),
            )
        }),
    );
    out
}
