use gcmc_core::neighbor::{CellGrid, MicrocellGrid, NeighborStrategy};
use gcmc_core::validate::{coverage, grid_consistency, strategy_equivalence, EQUIVALENCE_TOLERANCE};
use gcmc_core::{BoxSpec, LennardJones, RunConfig, SimBox, Simulation, StrategyKind};

fn lj_config(n: usize, density: f64) -> RunConfig {
    let mut c = RunConfig::new(2.0, 0.0, BoxSpec::Particles { count: n, density });
    c.seed = 2024;
    c
}

#[test]
fn grids_match_all_pairs_on_fresh_proposals() {
    for (n, rc) in [(1000, 2.5), (1500, 3.25), (700, 4.25)] {
        let mut c = lj_config(n, 0.6);
        c.r_cut = rc;
        let r = strategy_equivalence(&c, n, 0.6, 1500, 8).unwrap();
        assert!(r.worst() <= EQUIVALENCE_TOLERANCE, "n={n} r_cut={rc}: {r:?}");
    }
}

#[test]
fn grids_survive_many_commits() {
    let c = lj_config(600, 0.65);
    for kind in [StrategyKind::CellList, StrategyKind::Microcell] {
        let r = grid_consistency(&c, kind, 20_000, 2_000).unwrap();
        assert_eq!(r.failure, None, "{kind}");
        assert!(r.committed >= 20_000);
        if let Some(occ) = r.peak_occupancy {
            assert!(occ <= 5, "peak microcell occupancy {occ}");
        }
    }
}

#[test]
fn neighborhoods_cover_the_cutoff_sphere() {
    // Includes boxes whose last microcell is a thin sliver.
    for side in [10.0, 11.3, 12.05, 14.99] {
        for rc in [2.5, 2.75, 3.0, 3.75, 4.25] {
            if side < 2.0 * rc + 0.3 {
                continue;
            }
            let r = coverage(side, rc, 4000, 17).unwrap();
            assert_eq!((r.cell_list_misses, r.microcell_misses), (0, 0), "L={side} r_cut={rc}");
        }
    }
}

#[test]
fn pruned_visits_still_contain_every_partner() {
    let b = SimBox::new(13.07).unwrap();
    let lj = LennardJones::new(1.0, 1.0, 3.0).unwrap();
    let g = MicrocellGrid::new(b, lj, 5);
    let cube = [7usize; 3];
    let full = g.neighborhood(cube).len();
    let p = [7.5, 7.5, 7.5];
    let visited = g.visited_cells(&p);
    assert!(visited.len() < full, "pruning should drop corner cells");
    let mut sorted = visited.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), visited.len());
    // every point of the cutoff sphere on a dense lattice
    let step = 0.25;
    let k = (3.0 / step) as i64;
    for i in -k..=k {
        for j in -k..=k {
            for l in -k..=k {
                let d = [i as f64 * step, j as f64 * step, l as f64 * step];
                if d.iter().map(|x| x * x).sum::<f64>() > 9.0 {
                    continue;
                }
                let q = b.wrap([p[0] + d[0], p[1] + d[1], p[2] + d[2]]).unwrap();
                assert!(visited.contains(&g.cell_of(&q)), "offset {d:?}");
            }
        }
    }
}

#[test]
fn cell_list_uses_27_distinct_cells() {
    let b = SimBox::new(10.3).unwrap();
    let lj = LennardJones::new(1.0, 1.0, 2.5).unwrap();
    let g = CellGrid::new(b, lj, 64);
    assert_eq!(g.cells_per_dim(), 4);
    let mut n = g.neighborhood(5).to_vec();
    n.sort_unstable();
    n.dedup();
    assert_eq!(n.len(), 27);
}

#[test]
fn strategies_follow_the_same_trajectory() {
    let mut runs = Vec::new();
    for kind in StrategyKind::ALL {
        let mut c = lj_config(300, 0.6);
        c.strategy = kind;
        let mut sim = Simulation::new(c).unwrap();
        let mut accepted = Vec::new();
        for _ in 0..5000 {
            accepted.push(sim.step().unwrap().accepted);
        }
        assert!(sim.strategy().rebuild_check(sim.particles()).is_ok());
        runs.push((accepted, sim.n(), sim.particles().positions().to_vec()));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}
