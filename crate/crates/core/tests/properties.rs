use proptest::prelude::*;

use gcmc_core::checkpoint;
use gcmc_core::engine::{delete_probability, insert_probability, total_energy};
use gcmc_core::neighbor::{AnyStrategy, NeighborStrategy};
use gcmc_core::{BoxSpec, ParticleStore, RngStream, RunConfig, Simulation, StrategyKind, Vec3};

fn cfg(n: usize, density: f64, r_cut: f64, strategy: StrategyKind, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(2.0, 0.0, BoxSpec::Particles { count: n, density });
    c.r_cut = r_cut;
    c.strategy = strategy;
    c.seed = seed;
    c
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn grid_deltas_agree_with_all_pairs(
        seed in 0u64..1000,
        n in 20usize..400,
        density in 0.2f64..0.7,
        r_cut in prop::sample::select(vec![2.5, 2.75, 3.0, 3.25, 3.75]),
        probes in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..20),
    ) {
        let c = cfg(n, density, r_cut, StrategyKind::AllPairs, seed);
        let Ok(sim) = Simulation::new(c.clone()) else { return Ok(()) };
        let l = sim.sim_box().side();
        let lj = *sim.potential();
        let grids: Vec<AnyStrategy> = [StrategyKind::CellList, StrategyKind::Microcell]
            .iter()
            .map(|&k| {
                let mut g = AnyStrategy::new(k, *sim.sim_box(), lj, &c);
                g.build(sim.particles()).unwrap();
                g
            })
            .collect();
        for (k, &(x, y, z)) in probes.iter().enumerate() {
            let p: Vec3 = [x * l, y * l, z * l];
            let pid = k % sim.n();
            let reference = [
                sim.strategy().delta_insert(sim.particles(), p),
                sim.strategy().delta_delete(sim.particles(), pid).unwrap(),
                sim.strategy().delta_displace(sim.particles(), pid, p).unwrap(),
            ];
            for g in &grids {
                let got = [
                    g.delta_insert(sim.particles(), p),
                    g.delta_delete(sim.particles(), pid).unwrap(),
                    g.delta_displace(sim.particles(), pid, p).unwrap(),
                ];
                for (a, b) in got.iter().zip(&reference) {
                    prop_assert!(rel(a.energy, b.energy) <= 1e-10, "{:?}: {} vs {}", g.kind(), a.energy, b.energy);
                    prop_assert!(rel(a.virial, b.virial) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn committed_moves_keep_index_and_energy_exact(
        seed in 0u64..1000,
        strategy in prop::sample::select(StrategyKind::ALL.to_vec()),
        steps in 1u64..3000,
    ) {
        let mut sim = Simulation::new(cfg(150, 0.6, 2.5, strategy, seed)).unwrap();
        sim.run_steps(steps).unwrap();
        prop_assert!(sim.strategy().rebuild_check(sim.particles()).is_ok());
        let (u, w) = total_energy(sim.particles().positions(), sim.sim_box(), sim.potential()).unwrap();
        prop_assert!(rel(sim.pair_energy(), u) <= 1e-10);
        prop_assert!(rel(sim.virial(), w) <= 1e-10);
        prop_assert!(sim.audit().passed());
    }

    #[test]
    fn insert_then_delete_cancels(
        seed in 0u64..1000,
        strategy in prop::sample::select(StrategyKind::ALL.to_vec()),
        (x, y, z) in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let sim = Simulation::new(cfg(200, 0.5, 2.5, strategy, seed)).unwrap();
        let l = sim.sim_box().side();
        let p = [x * l, y * l, z * l];
        let up = sim.strategy().delta_insert(sim.particles(), p);
        let mut store = ParticleStore::from_positions(sim.particles().positions().to_vec(), 400).unwrap();
        let mut idx = AnyStrategy::new(strategy, *sim.sim_box(), *sim.potential(), sim.config());
        idx.build(&store).unwrap();
        let pid = idx.commit_insert(&mut store, p).unwrap();
        let down = idx.delta_delete(&store, pid).unwrap();
        prop_assert!(rel(down.energy, -up.energy) <= 1e-12);
        idx.commit_delete(&mut store, pid).unwrap();
        prop_assert_eq!(store.positions(), sim.particles().positions());
        prop_assert!(idx.rebuild_check(&store).is_ok());
    }

    #[test]
    fn acceptance_is_a_probability_and_detailed_balance_holds(
        du in -50.0f64..50.0,
        n in 0usize..5000,
        volume in 1.0f64..1e5,
        beta in 0.1f64..5.0,
        mu in -10.0f64..5.0,
        lambda in 0.5f64..2.0,
    ) {
        let ins = insert_probability(du, n, volume, beta, mu, lambda);
        let del = delete_probability(-du, n + 1, volume, beta, mu, lambda);
        prop_assert!((0.0..=1.0).contains(&ins));
        prop_assert!((0.0..=1.0).contains(&del));
        // P(N→N+1)/P(N+1→N) equals the ratio of the underlying weights.
        let weight = volume / (lambda.powi(3) * (n as f64 + 1.0)) * (beta * (mu - du)).exp();
        if ins > 0.0 && del > 0.0 && weight.is_finite() {
            prop_assert!(rel(ins / del, weight) <= 1e-9 * weight.max(1.0 / weight));
        }
    }

    #[test]
    fn checkpoint_round_trip_then_continue(
        seed in 0u64..1000,
        strategy in prop::sample::select(StrategyKind::ALL.to_vec()),
        before in 0u64..1500,
        after in 0u64..1500,
    ) {
        let mut a = Simulation::new(cfg(80, 0.55, 2.5, strategy, seed)).unwrap();
        a.run_steps(before).unwrap();
        let text = checkpoint::to_text(&a);
        let mut b = checkpoint::from_text(&text, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(checkpoint::to_text(&b), text);
        a.run_steps(after).unwrap();
        b.run_steps(after).unwrap();
        prop_assert_eq!(checkpoint::to_text(&a), checkpoint::to_text(&b));
    }

    #[test]
    fn rng_serialization_is_lossless(seed in any::<u64>(), skip in 0usize..1000) {
        let mut r = RngStream::new(seed);
        for _ in 0..skip {
            r.next_u64();
        }
        let mut back = RngStream::from_hex(&r.to_hex()).unwrap();
        for _ in 0..400 {
            prop_assert_eq!(back.next_u64(), r.next_u64());
        }
    }
}
