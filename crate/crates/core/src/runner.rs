//! Full runs: batches of `checkpoint_interval` moves, an audit and a
//! checkpoint after each batch, statistics CSV at the end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::checkpoint;
use crate::engine::{AuditReport, MoveKind, Simulation};
use crate::error::{Error, Result};
use crate::state::RunStatistics;

pub const STATS_HEADER: &str = "step,N,U,P,acc_disp,acc_ins,acc_del";
pub const STATS_FILE: &str = "stats.csv";
pub const FINAL_CHECKPOINT: &str = "final.chk";

pub fn checkpoint_name(step: u64) -> String {
    format!("checkpoint_{step:012}.chk")
}

/// One CSV row describing the current state.
pub fn stats_row(sim: &Simulation) -> String {
    let c = &sim.state().counters;
    format!(
        "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        sim.step_count(),
        sim.n(),
        sim.energy(),
        sim.pressure(),
        c.ratio(MoveKind::Displace),
        c.ratio(MoveKind::Insert),
        c.ratio(MoveKind::Delete),
    )
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub statistics: RunStatistics,
    pub audits: Vec<AuditReport>,
    pub stats_csv: PathBuf,
    /// Last checkpoint written: the final state, or the state that failed
    /// its audit.
    pub last_checkpoint: PathBuf,
}

impl RunSummary {
    pub fn failed_audit(&self) -> Option<&AuditReport> {
        self.audits.iter().find(|a| !a.passed())
    }
}

/// Runs `sim` up to `sim.config().steps` total steps, writing into `out_dir`.
/// Stops early at the first failed audit, leaving a checkpoint of the bad
/// state behind.
pub fn run(sim: &mut Simulation, out_dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let target = sim.config().steps;
    let interval = sim.config().checkpoint_interval;
    let mut csv = String::new();
    writeln!(csv, "{STATS_HEADER}").unwrap();
    writeln!(csv, "{}", stats_row(sim)).unwrap();
    let mut audits = Vec::new();
    let mut last_checkpoint = out_dir.join(FINAL_CHECKPOINT);
    let mut failed = false;
    while sim.step_count() < target {
        let step = sim.step_count();
        let batch = (interval - step % interval).min(target - step);
        sim.run_steps(batch)?;
        let audit = sim.audit();
        let ok = audit.passed();
        audits.push(audit);
        writeln!(csv, "{}", stats_row(sim)).unwrap();
        let step = sim.step_count();
        if !ok {
            last_checkpoint = out_dir.join(format!("failed_audit_{step:012}.chk"));
            checkpoint::save(sim, &last_checkpoint)?;
            failed = true;
            break;
        }
        if step.is_multiple_of(interval) && step < target {
            checkpoint::save(sim, &out_dir.join(checkpoint_name(step)))?;
        }
    }
    if !failed {
        if audits.is_empty() {
            audits.push(sim.audit());
        }
        checkpoint::save(sim, &last_checkpoint)?;
    }
    let stats_csv = out_dir.join(STATS_FILE);
    std::fs::write(&stats_csv, csv).map_err(|e| Error::io(format!("writing {}", stats_csv.display()), e))?;
    Ok(RunSummary {
        statistics: sim.statistics(),
        audits,
        stats_csv,
        last_checkpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BoxSpec, RunConfig, StrategyKind};

    fn cfg(steps: u64) -> RunConfig {
        let mut c = RunConfig::new(
            2.0,
            -1.5,
            BoxSpec::Particles {
                count: 120,
                density: 0.6,
            },
        );
        c.steps = steps;
        c.checkpoint_interval = 1000;
        c.strategy = StrategyKind::Microcell;
        c
    }

    #[test]
    fn writes_rows_and_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let mut sim = Simulation::new(cfg(2500)).unwrap();
        let s = run(&mut sim, dir.path()).unwrap();
        assert!(s.failed_audit().is_none());
        assert_eq!(s.audits.len(), 3);
        let csv = std::fs::read_to_string(&s.stats_csv).unwrap();
        let steps: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(steps, ["0", "1000", "2000", "2500"]);
        assert!(dir.path().join(checkpoint_name(1000)).exists());
        assert!(dir.path().join(checkpoint_name(2000)).exists());
        assert!(dir.path().join(FINAL_CHECKPOINT).exists());
    }

    #[test]
    fn zero_steps_gives_initial_row_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut sim = Simulation::new(cfg(0)).unwrap();
        let s = run(&mut sim, dir.path()).unwrap();
        let csv = std::fs::read_to_string(&s.stats_csv).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with(STATS_HEADER));
    }

    #[test]
    fn failed_audit_stops_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut sim = Simulation::new(cfg(5000)).unwrap();
        sim.debug_shift_energy(0.5);
        let s = run(&mut sim, dir.path()).unwrap();
        let bad = s.failed_audit().unwrap();
        assert_eq!(bad.step, 1000);
        assert!(s
            .last_checkpoint
            .file_name()
            .unwrap()
            .to_str()
            .unwrap()
            .starts_with("failed_audit"));
    }
}
