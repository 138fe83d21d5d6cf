//! Initial configurations: uniform random insertion with a minimum separation.

use crate::buckets::Buckets;
use crate::error::{Error, Result};
use crate::geometry::{SimBox, Vec3};
use crate::rng::RngStream;

/// Candidates closer than this (in σ) to a placed particle are rejected.
pub const MIN_SEPARATION: f64 = 0.85;

/// Consecutive rejections after which placement gives up.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

/// Places `n` particles uniformly at random, each at least `min_sep` from all
/// earlier ones. Draws three uniforms per candidate from `rng`.
pub fn random_configuration(n: usize, sim_box: &SimBox, min_sep: f64, rng: &mut RngStream) -> Result<Vec<Vec3>> {
    let l = sim_box.side();
    let mut grid = Buckets::new(l, min_sep);
    let min2 = min_sep * min_sep;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut rejected = 0u64;
        loop {
            let p = sim_box.wrap([rng.uniform() * l, rng.uniform() * l, rng.uniform() * l])?;
            let clash = match &grid {
                Some(g) => g.near(&p).any(|j| sim_box.dist2(&p, &out[j as usize]) < min2),
                None => out.iter().any(|q| sim_box.dist2(&p, q) < min2),
            };
            if !clash {
                if let Some(g) = grid.as_mut() {
                    g.insert(&p, out.len());
                }
                out.push(p);
                break;
            }
            rejected += 1;
            if rejected >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::Placement {
                    placed: out.len(),
                    attempts: rejected,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn respects_minimum_separation() {
        let b = SimBox::new((2000.0f64 / 0.67).cbrt()).unwrap();
        let mut rng = RngStream::new(11);
        let pts = random_configuration(2000, &b, MIN_SEPARATION, &mut rng).unwrap();
        assert_eq!(pts.len(), 2000);
        let mut min = f64::INFINITY;
        for i in 0..pts.len() {
            assert!(pts[i].iter().all(|c| (0.0..b.side()).contains(c)));
            for j in 0..i {
                min = min.min(b.dist2(&pts[i], &pts[j]));
            }
        }
        assert!(min >= MIN_SEPARATION * MIN_SEPARATION);
    }

    #[test]
    fn deterministic_per_seed() {
        let b = SimBox::new(8.0).unwrap();
        let a = random_configuration(100, &b, 0.85, &mut RngStream::new(5)).unwrap();
        let c = random_configuration(100, &b, 0.85, &mut RngStream::new(5)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn small_box_uses_full_scan() {
        let b = SimBox::new(2.0).unwrap();
        let pts = random_configuration(3, &b, 0.85, &mut RngStream::new(1)).unwrap();
        assert_eq!(pts.len(), 3);
    }

    #[test]
    fn gives_up_when_box_is_full() {
        let b = SimBox::new(2.0).unwrap();
        let err = random_configuration(200, &b, 0.85, &mut RngStream::new(1)).unwrap_err();
        assert!(matches!(err, Error::Placement { .. }));
    }
}
