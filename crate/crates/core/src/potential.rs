//! Truncated (unshifted) Lennard-Jones pair potential and tail corrections.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Squared separation, in units of σ², below which a pair counts as overlapping.
pub const NEAR_OVERLAP_R2: f64 = 1e-12;

/// Energy assigned to an overlapping pair while a proposal is evaluated.
///
/// Finite so compensated sums stay well defined; any Boltzmann factor built
/// from it underflows to zero.
pub const OVERLAP_ENERGY: f64 = 1e200;

/// Pair energy `u` and virial `w = -r du/dr`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairInteraction {
    pub energy: f64,
    pub virial: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LennardJones {
    epsilon: f64,
    sigma: f64,
    sigma2: f64,
    r_cut: f64,
    r_cut2: f64,
    overlap_r2: f64,
}

impl LennardJones {
    pub fn new(epsilon: f64, sigma: f64, r_cut: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be > 0, got {sigma}")));
        }
        if !(r_cut.is_finite() && r_cut > 0.0) {
            return Err(Error::Config(format!("r_cut must be > 0, got {r_cut}")));
        }
        Ok(LennardJones {
            epsilon,
            sigma,
            sigma2: sigma * sigma,
            r_cut,
            r_cut2: r_cut * r_cut,
            overlap_r2: NEAR_OVERLAP_R2 * sigma * sigma,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    #[inline]
    pub fn r_cut2(&self) -> f64 {
        self.r_cut2
    }

    /// Raw 12-6 terms for `0 < r2 <= r_cut²`.
    #[inline(always)]
    fn terms(&self, r2: f64) -> (f64, f64) {
        let s2 = self.sigma2 / r2;
        let s6 = s2 * s2 * s2;
        let s12 = s6 * s6;
        (4.0 * self.epsilon * (s12 - s6), 24.0 * self.epsilon * (2.0 * s12 - s6))
    }

    /// Pair term for a trial move: near-overlaps evaluate to [`OVERLAP_ENERGY`]
    /// instead of failing. Caller guarantees `r2 <= r_cut²`.
    #[inline(always)]
    pub(crate) fn proposal_terms(&self, r2: f64) -> (f64, f64) {
        if r2 < self.overlap_r2 {
            if self.epsilon == 0.0 {
                (0.0, 0.0)
            } else {
                (OVERLAP_ENERGY, 0.0)
            }
        } else {
            self.terms(r2)
        }
    }

    /// Pair term for a configuration that must already be valid; a
    /// near-overlap means corrupt state.
    #[inline]
    pub(crate) fn audited_terms(&self, r2: f64) -> Option<(f64, f64)> {
        if r2 < self.overlap_r2 {
            None
        } else {
            Some(self.terms(r2))
        }
    }

    pub fn pair(&self, r2: f64) -> Result<PairInteraction> {
        if !(r2 > 0.0) {
            return Err(Error::ZeroDistance);
        }
        if r2 > self.r_cut2 {
            return Ok(PairInteraction::default());
        }
        let (energy, virial) = self.terms(r2);
        Ok(PairInteraction { energy, virial })
    }
}

/// `4ε[(σ²/r2)⁶ − (σ²/r2)³]` and its virial, zero beyond `r_cut`.
pub fn lj_pair(r2: f64, epsilon: f64, sigma: f64, r_cut: f64) -> Result<PairInteraction> {
    LennardJones::new(epsilon, sigma, r_cut)?.pair(r2)
}

/// Mean-field contributions of the pairs beyond the cutoff.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TailCorrection {
    pub energy_per_particle: f64,
    pub pressure: f64,
}

/// Standard uniform-fluid tail corrections; all zero when `enabled` is false.
pub fn tail_corrections(density: f64, lj: &LennardJones, enabled: bool) -> TailCorrection {
    if !enabled || density == 0.0 {
        return TailCorrection::default();
    }
    let sr3 = (lj.sigma / lj.r_cut).powi(3);
    let sr9 = sr3 * sr3 * sr3;
    let s3 = lj.sigma.powi(3);
    TailCorrection {
        energy_per_particle: 8.0 / 3.0 * PI * density * lj.epsilon * s3 * (sr9 / 3.0 - sr3),
        pressure: 16.0 / 3.0 * PI * density * density * lj.epsilon * s3 * (2.0 / 3.0 * sr9 - sr3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LennardJones {
        LennardJones::new(1.0, 1.0, 2.5).unwrap()
    }

    #[test]
    fn zero_crossing_and_minimum() {
        let p = lj_pair(1.0, 1.0, 1.0, 2.5).unwrap();
        assert_eq!(p.energy, 0.0);
        assert_eq!(p.virial, 24.0);

        let rmin2 = 2f64.powf(1.0 / 3.0);
        let p = unit().pair(rmin2).unwrap();
        assert!((p.energy + 1.0).abs() < 1e-15);
        assert!(p.virial.abs() < 1e-13);
    }

    #[test]
    fn value_at_cutoff_radius() {
        // 4 (2.5^-12 - 2.5^-6) evaluated in 30-digit arithmetic
        let p = unit().pair(6.25).unwrap();
        assert!((p.energy - (-0.016316891136)).abs() < 1e-15);
    }

    #[test]
    fn zero_beyond_cutoff_and_zero_distance_is_error() {
        let p = unit().pair(6.25 + 1e-12).unwrap();
        assert_eq!(p, PairInteraction::default());
        assert!(matches!(unit().pair(0.0), Err(Error::ZeroDistance)));
        assert!(lj_pair(1.0, -1.0, 1.0, 2.5).is_err());
        assert!(lj_pair(1.0, 1.0, 0.0, 2.5).is_err());
    }

    #[test]
    fn epsilon_and_sigma_scale_literally() {
        let lj = LennardJones::new(2.0, 1.5, 5.0).unwrap();
        let r = 2.0f64;
        let p = lj.pair(r * r).unwrap();
        let sr = 1.5 / r;
        assert!((p.energy - 8.0 * (sr.powi(12) - sr.powi(6))).abs() < 1e-14);
    }

    #[test]
    fn proposal_overlap_is_huge_not_fatal() {
        let lj = unit();
        assert_eq!(lj.proposal_terms(1e-13).0, OVERLAP_ENERGY);
        assert!(lj.audited_terms(1e-13).is_none());
        let ideal = LennardJones::new(0.0, 1.0, 2.5).unwrap();
        assert_eq!(ideal.proposal_terms(0.0), (0.0, 0.0));
    }

    #[test]
    fn virial_matches_finite_difference() {
        let lj = unit();
        let mut rng = crate::rng::RngStream::new(2024);
        for _ in 0..20 {
            let r = 0.8 + (2.5 - 0.8) * rng.uniform();
            let h = 1e-5 * r;
            let u = |x: f64| lj.pair(x * x).unwrap().energy;
            let du = (u(r + h) - u(r - h)) / (2.0 * h);
            let w = lj.pair(r * r).unwrap().virial;
            let fd = -r * du;
            assert!((w - fd).abs() <= 1e-6 * w.abs().max(1e-3), "r={r} w={w} fd={fd}");
        }
    }

    #[test]
    fn tail_corrections_trivial_cases() {
        let lj = unit();
        assert_eq!(tail_corrections(0.0, &lj, true), TailCorrection::default());
        assert_eq!(tail_corrections(0.6, &lj, false), TailCorrection::default());
    }

    /// Composite Simpson on r = r_cut / t, t in (0, 1]; the integrands vanish
    /// like t^7 at t = 0 so the transformed interval is smooth.
    fn simpson_tail(f: impl Fn(f64) -> f64, r_cut: f64) -> f64 {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let g = |t: f64| if t == 0.0 { 0.0 } else { f(r_cut / t) * r_cut / (t * t) };
        let mut s = g(0.0) + g(1.0);
        for i in 1..n {
            let t = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(t);
        }
        s * h / 3.0
    }

    #[test]
    fn tail_corrections_match_quadrature() {
        let lj = unit();
        let rho = 0.6;
        let tail = tail_corrections(rho, &lj, true);
        // 30-digit mpmath quadrature of 2πρ∫u r² dr and -(2/3)πρ²∫r³ u' dr
        assert!((tail.energy_per_particle - (-0.321259861239817418)).abs() < 1e-12);
        assert!((tail.pressure - (-0.384984761702448010)).abs() < 1e-12);

        let u = |r: f64| 4.0 * (r.powi(-12) - r.powi(-6));
        let du = |r: f64| 4.0 * (-12.0 * r.powi(-13) + 6.0 * r.powi(-7));
        let ut = 2.0 * PI * rho * simpson_tail(|r| u(r) * r * r, 2.5);
        let pt = -2.0 / 3.0 * PI * rho * rho * simpson_tail(|r| r.powi(3) * du(r), 2.5);
        assert!((tail.energy_per_particle - ut).abs() < 1e-10, "{ut}");
        assert!((tail.pressure - pt).abs() < 1e-10, "{pt}");
    }
}
