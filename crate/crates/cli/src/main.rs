use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gcmc_core::bench::{self, BenchPlan};
use gcmc_core::checkpoint;
use gcmc_core::runner;
use gcmc_core::validate::{self, ValidateOptions};
use gcmc_core::{MoveKind, RunConfig, Simulation, StrategyKind};

/// Exit status for a run whose energy audit failed.
const EXIT_AUDIT_FAILED: u8 = 3;
/// Exit status for `validate` when any check fails.
const EXIT_CHECKS_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "Grand-canonical Monte Carlo for the Lennard-Jones fluid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation, writing stats.csv and checkpoints.
    Run(RunArgs),
    /// Run the strategy equivalence, grid, coverage and ideal-gas checks.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time the move loop of each strategy over sizes and cutoffs.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "resume")]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Total steps, counted from step 0 (also when resuming).
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, conflicts_with = "resume")]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Comma-separated particle counts.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "all_pairs,cell_list,microcell")]
    strategies: Vec<StrategyKind>,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<f64>>,
    /// Take temperature, chemical potential, density and seed from a config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate { config } => cmd_validate(&config),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    Ok(RunConfig::from_file(path)?)
}

/// Simulation restored from `path`. Run length, strategy and checkpoint
/// interval may change; everything else must match `file_config` if given.
fn resume(path: &Path, file_config: Option<RunConfig>, strategy: Option<StrategyKind>) -> Result<Simulation> {
    let saved = checkpoint::load(path)?;
    let mut config = saved.config().clone();
    if let Some(f) = file_config {
        config.steps = f.steps;
        config.strategy = f.strategy;
        config.checkpoint_interval = f.checkpoint_interval;
        if config != f {
            bail!("config file differs from the checkpoint in more than steps, strategy or checkpoint_interval");
        }
    }
    if let Some(s) = strategy {
        config.strategy = s;
    }
    let sim = Simulation::from_state(
        config,
        saved.particles().positions().to_vec(),
        saved.rng().clone(),
        *saved.state(),
    )?;
    Ok(sim)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let file_config = args.config.as_deref().map(load_config).transpose()?;
    let mut sim = match &args.resume {
        Some(path) => resume(path, file_config, args.strategy)?,
        None => {
            let mut config = file_config.expect("clap requires --config without --resume");
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(s) = args.strategy {
                config.strategy = s;
            }
            Simulation::new(config)?
        }
    };
    if let Some(steps) = args.steps {
        sim.set_target_steps(steps);
    }
    if sim.config().steps < sim.step_count() {
        bail!(
            "target of {} steps is behind the checkpoint at step {}",
            sim.config().steps,
            sim.step_count()
        );
    }

    let summary = runner::run(&mut sim, &args.out)?;
    let st = &summary.statistics;
    println!("steps            {}", st.steps);
    println!("final N          {}", st.final_n);
    println!("final energy     {:.10}", st.final_energy);
    println!("samples          {}", st.samples);
    println!("<N>              {:.4}", st.mean_n);
    println!("Var(N)           {:.4}", st.variance_n);
    println!("<U>              {:.6}", st.mean_energy);
    println!("<P>              {:.6}", st.mean_pressure);
    for kind in MoveKind::ALL {
        println!(
            "acceptance {:<6} {:.4}",
            format!("{kind:?}").to_lowercase(),
            st.acceptance_ratio(kind)
        );
    }
    println!("stats            {}", summary.stats_csv.display());
    println!("checkpoint       {}", summary.last_checkpoint.display());
    if let Some(a) = summary.failed_audit() {
        eprintln!(
            "audit failed at step {}: tracked U {:.16e}, recomputed {:.16e}{}",
            a.step,
            a.energy_tracked,
            a.energy_recomputed,
            a.failure.as_deref().map(|f| format!(" ({f})")).unwrap_or_default()
        );
        return Ok(ExitCode::from(EXIT_AUDIT_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let config = load_config(path)?;
    let results = validate::run_all(&config, &ValidateOptions::default());
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:<width$}  {}", r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", results.len() - failed, results.len());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECKS_FAILED)
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let mut plan = BenchPlan::new(args.sizes, args.strategies, args.steps, args.repeats);
    if let Some(path) = &args.config {
        plan.base = load_config(path)?;
    }
    if let Some(c) = args.cutoffs {
        plan.cutoffs = c;
    } else if args.config.is_some() {
        plan.cutoffs = vec![plan.base.r_cut];
    }
    let report = bench::run(&plan, |r| {
        eprintln!(
            "r_cut {} N {} {} repeat {}: {:.3} us/move",
            r.cutoff,
            r.size,
            r.strategy,
            r.repeat,
            r.per_move_seconds() * 1e6
        );
    })?;
    bench::write(&report, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    for s in &report.summaries {
        println!(
            "r_cut {:<5} N {:<6} {:<10} {:>10.3} us/move  speedup {:>8}  spread {:.1}%",
            s.cutoff,
            s.size,
            s.strategy,
            s.mean_per_move_seconds * 1e6,
            s.speedup_vs_all_pairs.map(|x| format!("{x:.2}")).unwrap_or_default(),
            s.spread_pct
        );
    }
    Ok(ExitCode::SUCCESS)
}
