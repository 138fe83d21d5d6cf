//! Compensated (Kahan-Babuška/Neumaier) summation.

/// Running sum with an error-compensation term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        CompensatedSum { sum: 0.0, comp: 0.0 }
    }

    /// Restores an accumulator from its raw parts (checkpoint loading).
    pub const fn from_parts(sum: f64, comp: f64) -> Self {
        CompensatedSum { sum, comp }
    }

    pub fn parts(&self) -> (f64, f64) {
        (self.sum, self.comp)
    }

    #[inline(always)]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        let big_first = self.sum.abs() >= x.abs();
        let (big, small) = if big_first { (self.sum, x) } else { (x, self.sum) };
        self.comp += (big - t) + small;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Energy and virial accumulated side by side.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct PairAccumulator {
    pub energy: CompensatedSum,
    pub virial: CompensatedSum,
}

impl PairAccumulator {
    #[inline(always)]
    pub fn add(&mut self, u: f64, w: f64) {
        self.energy.add(u);
        self.virial.add(w);
    }
}
