//! Line-oriented text checkpoints.
//!
//! ```text
//! gcmc-checkpoint 1
//! temperature = 2.0            # every config key, as in a config file
//! ...
//! end-config
//! step 120000
//! n 731
//! energy -4.2123456789012345e3
//! virial ...
//! attempted 36012 41870 42118
//! accepted 9120 2210 2204
//! samples 120000
//! sum_n <sum> <compensation>     # also sum_n2, sum_energy, sum_pressure
//! rng <index> <312 hex words>
//! positions
//! x y z                          # N lines
//! ```
//!
//! Floats are written with 17 significant digits, which round-trips every
//! f64 exactly.

use std::path::Path;

use crate::config::RunConfig;
use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rng::RngStream;
use crate::state::{Averages, MoveCounters, SystemState};
use crate::sum::CompensatedSum;

pub const FORMAT_HEADER: &str = "gcmc-checkpoint 1";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_sum(s: &CompensatedSum) -> String {
    let (a, b) = s.parts();
    format!("{} {}", fmt(a), fmt(b))
}

pub fn to_text(sim: &Simulation) -> String {
    let st = sim.state();
    let a = &st.averages;
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    out.push_str(&sim.config().to_config_text());
    out.push_str("end-config\n");
    let join = |v: &[u64; 3]| format!("{} {} {}", v[0], v[1], v[2]);
    let lines = [
        format!("step {}", st.step),
        format!("n {}", sim.n()),
        format!("energy {}", fmt(st.energy)),
        format!("virial {}", fmt(st.virial)),
        format!("attempted {}", join(&st.counters.attempted)),
        format!("accepted {}", join(&st.counters.accepted)),
        format!("samples {}", a.samples),
        format!("sum_n {}", fmt_sum(&a.sum_n)),
        format!("sum_n2 {}", fmt_sum(&a.sum_n2)),
        format!("sum_energy {}", fmt_sum(&a.sum_energy)),
        format!("sum_pressure {}", fmt_sum(&a.sum_pressure)),
        format!("rng {}", sim.rng().to_hex()),
        "positions".to_string(),
    ];
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    for p in sim.particles().positions() {
        out.push_str(&format!("{} {} {}\n", fmt(p[0]), fmt(p[1]), fmt(p[2])));
    }
    out
}

pub fn save(sim: &Simulation, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(sim)).map_err(|e| Error::io(format!("writing checkpoint {}", path.display()), e))
}

pub fn load(path: &Path) -> Result<Simulation> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading checkpoint {}", path.display()), e))?;
    from_text(&text, path)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.iter
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| bad("unexpected end of file"))
    }

    /// Reads `key v1 v2 ...` and returns the values.
    fn field(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (n, line) = self.next_line()?;
        let mut parts = line.split_ascii_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("line {n}: expected '{key}', got '{line}'")));
        }
        Ok(parts.collect())
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        match v.as_slice() {
            [x] => x.parse().map_err(|_| bad(format!("{key}: cannot parse '{x}'"))),
            _ => Err(bad(format!("{key}: expected one value"))),
        }
    }

    fn triple(&mut self, key: &str) -> Result<[u64; 3]> {
        let v = self.field(key)?;
        if v.len() != 3 {
            return Err(bad(format!("{key}: expected three values")));
        }
        let mut out = [0u64; 3];
        for (o, s) in out.iter_mut().zip(v) {
            *o = s.parse().map_err(|_| bad(format!("{key}: cannot parse '{s}'")))?;
        }
        Ok(out)
    }

    fn sum(&mut self, key: &str) -> Result<CompensatedSum> {
        let v = self.field(key)?;
        match v.as_slice() {
            [a, b] => Ok(CompensatedSum::from_parts(parse_f64(key, a)?, parse_f64(key, b)?)),
            _ => Err(bad(format!("{key}: expected two values"))),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad(format!("{key}: cannot parse '{s}'")))
}

pub fn from_text(text: &str, origin: &Path) -> Result<Simulation> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
    };
    let (_, header) = lines.next_line()?;
    if header.trim() != FORMAT_HEADER {
        return Err(bad(format!("unsupported header '{header}'")));
    }
    let mut config_text = String::new();
    loop {
        let (_, l) = lines.next_line()?;
        if l == "end-config" {
            break;
        }
        config_text.push_str(l);
        config_text.push('\n');
    }
    let config = RunConfig::parse(&config_text, origin)?;
    let step = lines.scalar("step")?;
    let n: usize = lines.scalar("n")?;
    let energy = lines.scalar("energy")?;
    let virial = lines.scalar("virial")?;
    let counters = MoveCounters {
        attempted: lines.triple("attempted")?,
        accepted: lines.triple("accepted")?,
    };
    let averages = Averages {
        samples: lines.scalar("samples")?,
        sum_n: lines.sum("sum_n")?,
        sum_n2: lines.sum("sum_n2")?,
        sum_energy: lines.sum("sum_energy")?,
        sum_pressure: lines.sum("sum_pressure")?,
    };
    let (_, rng_line) = lines.next_line()?;
    let rng_hex = rng_line
        .strip_prefix("rng ")
        .ok_or_else(|| bad("expected 'rng' line"))?;
    let rng = RngStream::from_hex(rng_hex)?;
    let (ln, marker) = lines.next_line()?;
    if marker != "positions" {
        return Err(bad(format!("line {ln}: expected 'positions'")));
    }
    let mut positions: Vec<Vec3> = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next_line()?;
        let v: Vec<&str> = l.split_ascii_whitespace().collect();
        if v.len() != 3 {
            return Err(bad(format!("line {ln}: expected 'x y z'")));
        }
        positions.push([
            parse_f64("position", v[0])?,
            parse_f64("position", v[1])?,
            parse_f64("position", v[2])?,
        ]);
    }
    if let Some((ln, extra)) = lines.iter.find(|(_, l)| !l.trim().is_empty()) {
        return Err(bad(format!("line {}: trailing content '{extra}'", ln + 1)));
    }
    let l = config.box_length();
    if let Some(p) = positions.iter().find(|p| p.iter().any(|c| !(0.0..l).contains(c))) {
        return Err(bad(format!("position {p:?} outside the box")));
    }
    let state = SystemState {
        step,
        energy,
        virial,
        counters,
        averages,
    };
    Simulation::from_state(config, positions, rng, state)
}
