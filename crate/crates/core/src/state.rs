use crate::engine::MoveKind;
use crate::sum::CompensatedSum;

/// Attempt/accept counts per move type, indexed by [`MoveKind::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MoveCounters {
    pub attempted: [u64; 3],
    pub accepted: [u64; 3],
}

impl MoveCounters {
    pub fn record(&mut self, kind: MoveKind, accepted: bool) {
        self.attempted[kind.index()] += 1;
        if accepted {
            self.accepted[kind.index()] += 1;
        }
    }

    /// Accepted fraction; 0 before the first attempt.
    pub fn ratio(&self, kind: MoveKind) -> f64 {
        let i = kind.index();
        if self.attempted[i] == 0 {
            0.0
        } else {
            self.accepted[i] as f64 / self.attempted[i] as f64
        }
    }

    pub fn total_accepted(&self) -> u64 {
        self.accepted.iter().sum()
    }
}

/// Running sums behind ⟨N⟩, Var(N), ⟨U⟩ and ⟨P⟩.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Averages {
    pub samples: u64,
    pub sum_n: CompensatedSum,
    pub sum_n2: CompensatedSum,
    pub sum_energy: CompensatedSum,
    pub sum_pressure: CompensatedSum,
}

impl Averages {
    pub fn sample(&mut self, n: usize, energy: f64, pressure: f64) {
        let n = n as f64;
        self.samples += 1;
        self.sum_n.add(n);
        self.sum_n2.add(n * n);
        self.sum_energy.add(energy);
        self.sum_pressure.add(pressure);
    }

    fn mean(&self, s: &CompensatedSum) -> f64 {
        if self.samples == 0 {
            f64::NAN
        } else {
            s.value() / self.samples as f64
        }
    }

    pub fn mean_n(&self) -> f64 {
        self.mean(&self.sum_n)
    }

    /// Population variance of the sampled particle counts.
    pub fn variance_n(&self) -> f64 {
        let m = self.mean_n();
        self.mean(&self.sum_n2) - m * m
    }

    pub fn mean_energy(&self) -> f64 {
        self.mean(&self.sum_energy)
    }

    pub fn mean_pressure(&self) -> f64 {
        self.mean(&self.sum_pressure)
    }
}

/// Tracked totals of the current configuration plus run bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SystemState {
    /// Moves attempted so far.
    pub step: u64,
    /// Cutoff-limited pair energy, updated incrementally.
    pub energy: f64,
    /// Pair virial Σ w, updated incrementally.
    pub virial: f64,
    pub counters: MoveCounters,
    pub averages: Averages,
}

/// Summary of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStatistics {
    pub steps: u64,
    pub samples: u64,
    pub mean_n: f64,
    pub variance_n: f64,
    pub mean_energy: f64,
    pub mean_pressure: f64,
    pub acceptance: [f64; 3],
    pub final_n: usize,
    pub final_energy: f64,
}

impl RunStatistics {
    pub fn acceptance_ratio(&self, kind: MoveKind) -> f64 {
        self.acceptance[kind.index()]
    }
}
