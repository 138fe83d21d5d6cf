//! Run parameters and the `key = value` configuration file format.
//!
//! ```text
//! # comment
//! temperature = 2.0
//! chemical_potential = -3.1
//! particles = 4096
//! density = 0.6
//! strategy = microcell
//! ```
//!
//! Unknown keys are rejected. The box is given either by `box_length` or by
//! `particles` (with `density`, default 0.6); not both.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::SimBox;
use crate::potential::LennardJones;

pub const DEFAULT_DISPLACE_PERCENT: f64 = 0.30;
pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 10_000;
pub const DEFAULT_DENSITY: f64 = 0.6;
pub const DEFAULT_R_CUT: f64 = 2.5;
pub const DEFAULT_STEPS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 5489;
pub const DEFAULT_MICROCELL_CAPACITY: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    AllPairs,
    CellList,
    Microcell,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::AllPairs, StrategyKind::CellList, StrategyKind::Microcell];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::AllPairs => "all_pairs",
            StrategyKind::CellList => "cell_list",
            StrategyKind::Microcell => "microcell",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all_pairs" => Ok(StrategyKind::AllPairs),
            "cell_list" => Ok(StrategyKind::CellList),
            "microcell" => Ok(StrategyKind::Microcell),
            other => Err(Error::Config(format!(
                "unknown strategy '{other}' (expected all_pairs, cell_list or microcell)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoxSpec {
    Length(f64),
    /// Box sized so `count` particles sit at `density`; the initial
    /// configuration places that many particles.
    Particles {
        count: usize,
        density: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub temperature: f64,
    pub chemical_potential: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub r_cut: f64,
    pub box_spec: BoxSpec,
    pub displace_percent: f64,
    pub steps: u64,
    pub seed: u64,
    pub checkpoint_interval: u64,
    pub strategy: StrategyKind,
    pub tail_corrections: bool,
    /// Traditional cell-list slots per cell; `None` picks 48 or 96 by cutoff.
    pub cell_capacity: Option<usize>,
    pub microcell_capacity: usize,
    /// Steps excluded from the running averages.
    pub equilibration_steps: u64,
    pub sampling_interval: u64,
    /// Displacement trial radius; `None` draws the new position anywhere in the box.
    pub max_displacement: Option<f64>,
}

impl RunConfig {
    /// Configuration with the mandatory thermodynamic inputs and defaults for
    /// everything else.
    pub fn new(temperature: f64, chemical_potential: f64, box_spec: BoxSpec) -> Self {
        RunConfig {
            temperature,
            chemical_potential,
            lambda: 1.0,
            epsilon: 1.0,
            sigma: 1.0,
            r_cut: DEFAULT_R_CUT,
            box_spec,
            displace_percent: DEFAULT_DISPLACE_PERCENT,
            steps: DEFAULT_STEPS,
            seed: DEFAULT_SEED,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
            strategy: StrategyKind::Microcell,
            tail_corrections: false,
            cell_capacity: None,
            microcell_capacity: DEFAULT_MICROCELL_CAPACITY,
            equilibration_steps: 0,
            sampling_interval: 1,
            max_displacement: None,
        }
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn box_length(&self) -> f64 {
        match self.box_spec {
            BoxSpec::Length(l) => l,
            BoxSpec::Particles { count, density } => (count as f64 / density).cbrt(),
        }
    }

    pub fn sim_box(&self) -> Result<SimBox> {
        SimBox::new(self.box_length())
    }

    pub fn potential(&self) -> Result<LennardJones> {
        LennardJones::new(self.epsilon, self.sigma, self.r_cut)
    }

    pub fn initial_particles(&self) -> usize {
        match self.box_spec {
            BoxSpec::Length(_) => 0,
            BoxSpec::Particles { count, .. } => count,
        }
    }

    /// 48 slots per cell up to a 4σ cutoff, 96 above.
    pub fn effective_cell_capacity(&self) -> usize {
        self.cell_capacity
            .unwrap_or(if self.r_cut <= 4.0 * self.sigma { 48 } else { 96 })
    }

    /// Upper bound on the particle count: the microcell occupancy cap times
    /// the number of σ³ volumes, never below the initial count.
    pub fn particle_capacity(&self) -> usize {
        let per_volume = self.box_length() / self.sigma;
        let cells = per_volume.ceil().powi(3);
        let cap = cells * self.microcell_capacity.max(DEFAULT_MICROCELL_CAPACITY) as f64;
        (cap as usize).max(self.initial_particles())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad(format!("temperature must be > 0, got {}", self.temperature));
        }
        if !self.chemical_potential.is_finite() {
            return bad("chemical_potential must be finite".into());
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        self.potential()?;
        if !(0.0..=1.0).contains(&self.displace_percent) {
            return bad(format!(
                "displace_percent must be in [0, 1], got {}",
                self.displace_percent
            ));
        }
        match self.box_spec {
            BoxSpec::Length(l) if !(l.is_finite() && l > 0.0) => {
                return bad(format!("box_length must be > 0, got {l}"));
            }
            BoxSpec::Particles { density, .. } if !(density.is_finite() && density > 0.0) => {
                return bad(format!("density must be > 0, got {density}"));
            }
            BoxSpec::Particles { count: 0, .. } => {
                return bad("particles must be > 0 (use box_length for an empty box)".into());
            }
            _ => {}
        }
        let l = self.box_length();
        if self.r_cut > 0.5 * l {
            return bad(format!("r_cut {} exceeds half the box length {}", self.r_cut, l));
        }
        if self.checkpoint_interval == 0 {
            return bad("checkpoint_interval must be >= 1".into());
        }
        if self.sampling_interval == 0 {
            return bad("sampling_interval must be >= 1".into());
        }
        if self.effective_cell_capacity() == 0 {
            return bad("cell_capacity must be >= 1".into());
        }
        if !(1..=crate::neighbor::MAX_MICROCELL_CAPACITY).contains(&self.microcell_capacity) {
            return bad(format!(
                "microcell_capacity must be in 1..={}",
                crate::neighbor::MAX_MICROCELL_CAPACITY
            ));
        }
        if let Some(d) = self.max_displacement {
            if !(d.is_finite() && d > 0.0) {
                return bad(format!("max_displacement must be > 0, got {d}"));
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    /// Parses configuration text; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Entries::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected 'key = value', got '{line}'")))?;
            entries.set(key.trim(), value.trim()).map_err(|e| perr(e.to_string()))?;
        }
        let cfg = entries.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes every field as config-file lines; floats use the shortest
    /// representation that parses back to the same bits.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("temperature", format!("{:?}", self.temperature));
        put("chemical_potential", format!("{:?}", self.chemical_potential));
        put("lambda", format!("{:?}", self.lambda));
        put("epsilon", format!("{:?}", self.epsilon));
        put("sigma", format!("{:?}", self.sigma));
        put("r_cut", format!("{:?}", self.r_cut));
        match self.box_spec {
            BoxSpec::Length(l) => put("box_length", format!("{l:?}")),
            BoxSpec::Particles { count, density } => {
                put("particles", count.to_string());
                put("density", format!("{density:?}"));
            }
        }
        put("displace_percent", format!("{:?}", self.displace_percent));
        put("steps", self.steps.to_string());
        put("seed", self.seed.to_string());
        put("checkpoint_interval", self.checkpoint_interval.to_string());
        put("strategy", self.strategy.to_string());
        put(
            "tail_corrections",
            if self.tail_corrections { "on" } else { "off" }.into(),
        );
        if let Some(c) = self.cell_capacity {
            put("cell_capacity", c.to_string());
        }
        put("microcell_capacity", self.microcell_capacity.to_string());
        put("equilibration_steps", self.equilibration_steps.to_string());
        put("sampling_interval", self.sampling_interval.to_string());
        if let Some(d) = self.max_displacement {
            put("max_displacement", format!("{d:?}"));
        }
        out
    }
}

#[derive(Default)]
struct Entries {
    temperature: Option<f64>,
    chemical_potential: Option<f64>,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    sigma: Option<f64>,
    r_cut: Option<f64>,
    box_length: Option<f64>,
    particles: Option<usize>,
    density: Option<f64>,
    displace_percent: Option<f64>,
    steps: Option<u64>,
    seed: Option<u64>,
    checkpoint_interval: Option<u64>,
    strategy: Option<StrategyKind>,
    tail_corrections: Option<bool>,
    cell_capacity: Option<usize>,
    microcell_capacity: Option<usize>,
    equilibration_steps: Option<u64>,
    sampling_interval: Option<u64>,
    max_displacement: Option<f64>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected on/off, got '{value}'"))),
    }
}

fn store<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<()> {
    if slot.replace(value).is_some() {
        return Err(Error::Config(format!("duplicate key '{key}'")));
    }
    Ok(())
}

impl Entries {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "temperature" => store(&mut self.temperature, key, parse_num(key, value)?),
            "chemical_potential" => store(&mut self.chemical_potential, key, parse_num(key, value)?),
            "lambda" => store(&mut self.lambda, key, parse_num(key, value)?),
            "epsilon" => store(&mut self.epsilon, key, parse_num(key, value)?),
            "sigma" => store(&mut self.sigma, key, parse_num(key, value)?),
            "r_cut" => store(&mut self.r_cut, key, parse_num(key, value)?),
            "box_length" => store(&mut self.box_length, key, parse_num(key, value)?),
            "particles" => store(&mut self.particles, key, parse_num(key, value)?),
            "density" => store(&mut self.density, key, parse_num(key, value)?),
            "displace_percent" => store(&mut self.displace_percent, key, parse_num(key, value)?),
            "steps" => store(&mut self.steps, key, parse_num(key, value)?),
            "seed" => store(&mut self.seed, key, parse_num(key, value)?),
            "checkpoint_interval" => store(&mut self.checkpoint_interval, key, parse_num(key, value)?),
            "strategy" => store(&mut self.strategy, key, value.parse()?),
            "tail_corrections" => store(&mut self.tail_corrections, key, parse_flag(key, value)?),
            "cell_capacity" => store(&mut self.cell_capacity, key, parse_num(key, value)?),
            "microcell_capacity" => store(&mut self.microcell_capacity, key, parse_num(key, value)?),
            "equilibration_steps" => store(&mut self.equilibration_steps, key, parse_num(key, value)?),
            "sampling_interval" => store(&mut self.sampling_interval, key, parse_num(key, value)?),
            "max_displacement" => store(&mut self.max_displacement, key, parse_num(key, value)?),
            other => Err(Error::Config(format!("unknown key '{other}'"))),
        }
    }

    fn finish(self) -> Result<RunConfig> {
        let temperature = self
            .temperature
            .ok_or_else(|| Error::Config("missing required key 'temperature'".into()))?;
        let chemical_potential = self
            .chemical_potential
            .ok_or_else(|| Error::Config("missing required key 'chemical_potential'".into()))?;
        let box_spec = match (self.box_length, self.particles, self.density) {
            (Some(l), None, None) => BoxSpec::Length(l),
            (None, Some(count), density) => BoxSpec::Particles {
                count,
                density: density.unwrap_or(DEFAULT_DENSITY),
            },
            (None, None, _) => return Err(Error::Config("give either box_length or particles (+ density)".into())),
            (Some(_), _, _) => {
                return Err(Error::Config(
                    "box_length cannot be combined with particles/density".into(),
                ))
            }
        };
        let mut cfg = RunConfig::new(temperature, chemical_potential, box_spec);
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        take!(
            lambda,
            epsilon,
            sigma,
            r_cut,
            displace_percent,
            steps,
            seed,
            checkpoint_interval,
            strategy,
            tail_corrections,
            microcell_capacity,
            equilibration_steps,
            sampling_interval
        );
        cfg.cell_capacity = self.cell_capacity;
        cfg.max_displacement = self.max_displacement;
        Ok(cfg)
    }
}
