//! Periodic cubic box and minimum-image distances.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Periodic cube of side `L` (σ units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimBox {
    side: f64,
    half: f64,
    volume: f64,
}

impl SimBox {
    pub fn new(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::Config(format!("box length must be positive, got {side}")));
        }
        Ok(SimBox {
            side,
            half: 0.5 * side,
            volume: side * side * side,
        })
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    #[inline]
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Maps `p` into `[0, L)` on every axis by integer multiples of `L`.
    pub fn wrap(&self, p: Vec3) -> Result<Vec3> {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        Ok(p.map(|c| self.wrap_coord(c)))
    }

    #[inline]
    pub(crate) fn wrap_coord(&self, c: f64) -> f64 {
        let w = c.rem_euclid(self.side);
        // rem_euclid of a tiny negative value can round up to exactly L.
        if w >= self.side {
            0.0
        } else {
            w
        }
    }

    /// Squared minimum-image distance for coordinates already inside the box.
    ///
    /// Hot path of every strategy: one compare-and-shift per axis, valid only
    /// when each per-axis difference is below `L` in magnitude.
    #[inline(always)]
    pub fn dist2(&self, a: &Vec3, b: &Vec3) -> f64 {
        let mut r2 = 0.0;
        for k in 0..3 {
            let d = a[k] - b[k];
            // Written as selects so the compiler emits no data-dependent branches.
            let d = if d > self.half { d - self.side } else { d };
            let d = if d < -self.half { d + self.side } else { d };
            r2 += d * d;
        }
        r2
    }
}

/// Wraps `p` into `sim_box`.
pub fn wrap_position(p: Vec3, sim_box: &SimBox) -> Result<Vec3> {
    sim_box.wrap(p)
}

/// Squared distance to the nearest periodic image of `b` as seen from `a`.
///
/// Accepts arbitrary finite coordinates; each per-axis delta is reduced to
/// magnitude at most `L/2`.
pub fn min_image_dist2(a: Vec3, b: Vec3, sim_box: &SimBox) -> Result<f64> {
    if a.iter().chain(b.iter()).any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(if a.iter().all(|c| c.is_finite()) { b } else { a }));
    }
    let l = sim_box.side;
    let mut r2 = 0.0;
    for k in 0..3 {
        let mut d = a[k] - b[k];
        d -= l * (d / l).round();
        r2 += d * d;
    }
    Ok(r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ten() -> SimBox {
        SimBox::new(10.0).unwrap()
    }

    #[test]
    fn volume_is_cube_of_side() {
        let b = SimBox::new(23.9).unwrap();
        assert_eq!(b.volume(), 23.9 * 23.9 * 23.9);
        assert!(SimBox::new(0.0).is_err());
        assert!(SimBox::new(-1.0).is_err());
        assert!(SimBox::new(f64::NAN).is_err());
    }

    #[test]
    fn wrap_examples() {
        let b = ten();
        let w = wrap_position([10.5, 0.2, -0.1], &b).unwrap();
        assert_eq!(w[0], 0.5);
        assert_eq!(w[1], 0.2);
        assert!((w[2] - 9.9).abs() < 1e-12);
        assert_eq!(wrap_position([0.0; 3], &b).unwrap(), [0.0; 3]);
        assert_eq!(wrap_position([25.0; 3], &b).unwrap(), [5.0; 3]);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        let b = ten();
        assert!(matches!(b.wrap([f64::NAN, 0.0, 0.0]), Err(Error::NonFinite(_))));
        assert!(b.wrap([0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn wrap_tiny_negative_stays_below_side() {
        let b = ten();
        let w = b.wrap([-1e-18, 0.0, 0.0]).unwrap();
        assert!(w[0] < 10.0 && w[0] >= 0.0);
    }

    #[test]
    fn min_image_examples() {
        let b = ten();
        let d = min_image_dist2([0.1, 0.0, 0.0], [9.9, 0.0, 0.0], &b).unwrap();
        assert!((d - 0.04).abs() < 1e-12);
        assert_eq!(min_image_dist2([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], &b).unwrap(), 0.0);
        let big = SimBox::new(100.0).unwrap();
        assert_eq!(min_image_dist2([1.0, 2.0, 3.0], [4.0, 6.0, 3.0], &big).unwrap(), 25.0);
        assert!(min_image_dist2([f64::NAN; 3], [0.0; 3], &b).is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        0.0..10.0f64
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(x in -1e4..1e4f64, y in -1e4..1e4f64, z in -1e4..1e4f64) {
            let b = ten();
            let w = b.wrap([x, y, z]).unwrap();
            prop_assert!(w.iter().all(|c| (0.0..10.0).contains(c)));
            prop_assert_eq!(b.wrap(w).unwrap(), w);
            for k in 0..3 {
                let shift = ([x, y, z][k] - w[k]) / 10.0;
                prop_assert!((shift - shift.round()).abs() < 1e-9);
            }
        }

        #[test]
        fn min_image_symmetric_and_bounded(
            a in prop::array::uniform3(coord()),
            b in prop::array::uniform3(coord()),
        ) {
            let bx = ten();
            let ab = min_image_dist2(a, b, &bx).unwrap();
            let ba = min_image_dist2(b, a, &bx).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= 3.0 * 25.0);
            // the hot-path variant agrees on wrapped input
            prop_assert!((bx.dist2(&a, &b) - ab).abs() <= 1e-12 * (1.0 + ab));
        }

        #[test]
        fn min_image_translation_invariant(
            a in prop::array::uniform3(coord()),
            b in prop::array::uniform3(coord()),
            k in prop::array::uniform3(-5i32..5),
        ) {
            let bx = ten();
            let shifted = [a[0] + 10.0 * k[0] as f64, a[1] + 10.0 * k[1] as f64, a[2] + 10.0 * k[2] as f64];
            let d0 = min_image_dist2(a, b, &bx).unwrap();
            let d1 = min_image_dist2(shifted, b, &bx).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-9);
        }
    }
}
