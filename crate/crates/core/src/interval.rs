use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Closed interval `[lo, hi]` of reals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Image under `x -> x^s` (monotone for nonnegative endpoints).
    pub fn powf(&self, s: T) -> Self {
        Self::new(self.lo.max(T::zero()).powf(s), self.hi.max(T::zero()).powf(s))
    }
}
