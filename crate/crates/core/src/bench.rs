//! Timing harness: per-move cost of each strategy across system sizes and
//! cutoffs.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::config::{BoxSpec, RunConfig, StrategyKind};
use crate::engine::Simulation;
use crate::error::{Error, Result};

/// Thermodynamic state used when no config file is given: a dense
/// supercritical fluid that holds ρ near 0.67 over short runs.
pub const BENCH_TEMPERATURE: f64 = 2.0;
pub const BENCH_CHEMICAL_POTENTIAL: f64 = 1.3;
pub const BENCH_DENSITY: f64 = 0.67;

pub const CSV_HEADER: &str =
    "row,cutoff,size,strategy,repeat,seed,init_s,run_s,per_move_us,final_n,speedup_vs_all_pairs,spread_pct";

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub strategies: Vec<StrategyKind>,
    pub cutoffs: Vec<f64>,
    pub steps: u64,
    pub repeats: usize,
    /// Thermodynamics, density and base seed; box and strategy are set per task.
    pub base: RunConfig,
}

impl BenchPlan {
    pub fn new(sizes: Vec<usize>, strategies: Vec<StrategyKind>, steps: u64, repeats: usize) -> Self {
        let base = RunConfig::new(
            BENCH_TEMPERATURE,
            BENCH_CHEMICAL_POTENTIAL,
            BoxSpec::Particles {
                count: 1,
                density: BENCH_DENSITY,
            },
        );
        BenchPlan {
            sizes,
            strategies,
            cutoffs: vec![base.r_cut],
            steps,
            repeats,
            base,
        }
    }

    pub fn density(&self) -> f64 {
        match self.base.box_spec {
            BoxSpec::Particles { density, .. } => density,
            BoxSpec::Length(_) => BENCH_DENSITY,
        }
    }

    fn task_config(&self, cutoff: f64, size: usize, strategy: StrategyKind, repeat: usize) -> RunConfig {
        let mut c = self.base.clone();
        c.box_spec = BoxSpec::Particles {
            count: size,
            density: self.density(),
        };
        c.r_cut = cutoff;
        c.strategy = strategy;
        c.steps = self.steps;
        c.seed = self.base.seed.wrapping_add(repeat as u64);
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub cutoff: f64,
    pub size: usize,
    pub strategy: StrategyKind,
    pub repeat: usize,
    pub seed: u64,
    /// Placement, initial energy and binning.
    pub init_seconds: f64,
    pub run_seconds: f64,
    pub steps: u64,
    pub final_n: usize,
}

impl BenchRecord {
    pub fn per_move_seconds(&self) -> f64 {
        self.run_seconds / self.steps.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSummary {
    pub cutoff: f64,
    pub size: usize,
    pub strategy: StrategyKind,
    pub mean_init_seconds: f64,
    pub mean_run_seconds: f64,
    pub mean_per_move_seconds: f64,
    /// Largest deviation of a repeat from the mean, in percent.
    pub spread_pct: f64,
    pub speedup_vs_all_pairs: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub summaries: Vec<BenchSummary>,
}

impl BenchReport {
    pub fn summary(&self, cutoff: f64, size: usize, strategy: StrategyKind) -> Option<&BenchSummary> {
        self.summaries
            .iter()
            .find(|s| s.cutoff == cutoff && s.size == size && s.strategy == strategy)
    }
}

/// Times one task. The clock for the move loop starts after the simulation
/// is fully initialized.
pub fn time_task(config: RunConfig) -> Result<BenchRecord> {
    let t0 = Instant::now();
    let mut sim = Simulation::new(config.clone())?;
    let init_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    sim.run_steps(config.steps)?;
    let run_seconds = t1.elapsed().as_secs_f64();
    let size = config.initial_particles();
    Ok(BenchRecord {
        cutoff: config.r_cut,
        size,
        strategy: config.strategy,
        repeat: 0,
        seed: config.seed,
        init_seconds,
        run_seconds,
        steps: config.steps,
        final_n: sim.n(),
    })
}

/// Runs every (cutoff, size, strategy, repeat) task in that nesting order,
/// calling `progress` after each.
pub fn run(plan: &BenchPlan, mut progress: impl FnMut(&BenchRecord)) -> Result<BenchReport> {
    if plan.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let mut report = BenchReport::default();
    for &cutoff in &plan.cutoffs {
        for &size in &plan.sizes {
            for &strategy in &plan.strategies {
                let mut recs = Vec::with_capacity(plan.repeats);
                for repeat in 0..plan.repeats {
                    let mut r = time_task(plan.task_config(cutoff, size, strategy, repeat))?;
                    r.repeat = repeat;
                    progress(&r);
                    recs.push(r);
                }
                report.summaries.push(summarize(&recs));
                report.records.extend(recs);
            }
            let reference = report
                .summary(cutoff, size, StrategyKind::AllPairs)
                .map(|s| s.mean_per_move_seconds);
            if let Some(base) = reference {
                for s in report
                    .summaries
                    .iter_mut()
                    .filter(|s| s.cutoff == cutoff && s.size == size)
                {
                    s.speedup_vs_all_pairs = Some(base / s.mean_per_move_seconds);
                }
            }
        }
    }
    Ok(report)
}

fn summarize(recs: &[BenchRecord]) -> BenchSummary {
    let n = recs.len() as f64;
    let mean = |f: &dyn Fn(&BenchRecord) -> f64| recs.iter().map(f).sum::<f64>() / n;
    let per_move = mean(&|r| r.per_move_seconds());
    let spread = recs
        .iter()
        .map(|r| (r.per_move_seconds() - per_move).abs() / per_move * 100.0)
        .fold(0.0, f64::max);
    BenchSummary {
        cutoff: recs[0].cutoff,
        size: recs[0].size,
        strategy: recs[0].strategy,
        mean_init_seconds: mean(&|r| r.init_seconds),
        mean_run_seconds: mean(&|r| r.run_seconds),
        mean_per_move_seconds: per_move,
        spread_pct: spread,
        speedup_vs_all_pairs: None,
    }
}

pub fn to_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for r in &report.records {
        writeln!(
            out,
            "run,{},{},{},{},{},{:.6},{:.6},{:.6},{},,",
            r.cutoff,
            r.size,
            r.strategy,
            r.repeat,
            r.seed,
            r.init_seconds,
            r.run_seconds,
            r.per_move_seconds() * 1e6,
            r.final_n
        )
        .unwrap();
    }
    for s in &report.summaries {
        let speedup = s.speedup_vs_all_pairs.map(|x| format!("{x:.4}")).unwrap_or_default();
        writeln!(
            out,
            "mean,{},{},{},,,{:.6},{:.6},{:.6},,{},{:.2}",
            s.cutoff,
            s.size,
            s.strategy,
            s.mean_init_seconds,
            s.mean_run_seconds,
            s.mean_per_move_seconds * 1e6,
            speedup,
            s.spread_pct
        )
        .unwrap();
    }
    out
}

/// Gnuplot script plotting speedup against size for `csv_name`.
pub fn gnuplot_script(csv_name: &str, report: &BenchReport) -> String {
    let mut out = String::new();
    writeln!(out, "set datafile separator ','").unwrap();
    writeln!(out, "set key left top").unwrap();
    writeln!(out, "set logscale x 2").unwrap();
    writeln!(out, "set xlabel 'particles'").unwrap();
    writeln!(out, "set ylabel 'speedup vs all_pairs'").unwrap();
    let mut cutoffs: Vec<f64> = report.summaries.iter().map(|s| s.cutoff).collect();
    cutoffs.dedup();
    let mut strategies: Vec<StrategyKind> = report.summaries.iter().map(|s| s.strategy).collect();
    strategies.sort_by_key(|s| s.name());
    strategies.dedup();
    let mut plots = Vec::new();
    for c in &cutoffs {
        for s in &strategies {
            plots.push(format!(
                "'{csv_name}' using ((strcol(1) eq 'mean' && $2 == {c} && strcol(4) eq '{s}') ? $3 : 1/0):11 with linespoints title '{s} r_cut={c}'"
            ));
        }
    }
    writeln!(out, "plot {}", plots.join(", \\\n     ")).unwrap();
    out
}

pub fn write(report: &BenchReport, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(report)).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    let script = path.with_extension("gp");
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("bench.csv");
    std::fs::write(&script, gnuplot_script(name, report))
        .map_err(|e| Error::io(format!("writing {}", script.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_plan_produces_rows_and_speedups() {
        let mut plan = BenchPlan::new(vec![128, 256], StrategyKind::ALL.to_vec(), 300, 2);
        plan.cutoffs = vec![2.0];
        let mut seen = 0;
        let report = run(&plan, |_| seen += 1).unwrap();
        assert_eq!(seen, 12);
        assert_eq!(report.records.len(), 12);
        assert_eq!(report.summaries.len(), 6);
        let ap = report.summary(2.0, 128, StrategyKind::AllPairs).unwrap();
        assert_eq!(ap.speedup_vs_all_pairs, Some(1.0));
        // Same seed, same trajectory, whatever the strategy.
        for size in [128, 256] {
            let finals: Vec<_> = report
                .records
                .iter()
                .filter(|r| r.size == size && r.repeat == 1)
                .map(|r| r.final_n)
                .collect();
            assert!(finals.windows(2).all(|w| w[0] == w[1]));
        }
        let csv = to_csv(&report);
        assert_eq!(csv.lines().count(), 1 + 12 + 6);
        assert!(csv.lines().all(|l| l.split(',').count() == 12));
        assert!(gnuplot_script("b.csv", &report).contains("microcell r_cut=2"));
    }
}
