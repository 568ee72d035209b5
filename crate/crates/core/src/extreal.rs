//! Extended reals `ℝ ∪ {−∞, +∞}` with the convention `∞ − ∞ = −∞`.
//!
//! Utilities may take the value `−∞` (unacceptable outcomes), so sums and
//! products of utility values must never produce NaN. All of the
//! indeterminate forms are resolved here:
//!
//! * `(+∞) + (−∞) = −∞`
//! * `0 · (±∞) = 0`

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const POS_INF: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps a float. NaN is mapped to `−∞`, the only value the convention
    /// above can produce from an indeterminate form.
    #[inline]
    pub fn new(v: f64) -> Self {
        if v.is_nan() {
            Self::NEG_INF
        } else {
            ExtReal(v)
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    #[inline]
    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Finite value or `None`.
    pub fn finite(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.is_neg_inf() || rhs.is_neg_inf() {
            return ExtReal::NEG_INF;
        }
        ExtReal(self.0 + rhs.0)
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::new(rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn mul(self, rhs: ExtReal) -> ExtReal {
        if self.0 == 0.0 || rhs.0 == 0.0 {
            return ExtReal::ZERO;
        }
        ExtReal(self.0 * rhs.0)
    }
}

impl Mul<f64> for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn mul(self, rhs: f64) -> ExtReal {
        self * ExtReal::new(rhs)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_neg_inf() {
            f.write_str("-inf")
        } else if self.is_pos_inf() {
            f.write_str("inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inf_minus_inf_is_neg_inf() {
        assert!((ExtReal::POS_INF + ExtReal::NEG_INF).is_neg_inf());
        assert!((ExtReal::POS_INF - ExtReal::POS_INF).is_neg_inf());
        assert!((ExtReal::NEG_INF + 1e300).is_neg_inf());
    }

    #[test]
    fn zero_times_inf_is_zero() {
        assert_eq!((ExtReal::NEG_INF * 0.0).value(), 0.0);
        assert_eq!((ExtReal::ZERO * ExtReal::POS_INF).value(), 0.0);
        assert!((ExtReal::NEG_INF * -2.0).is_pos_inf());
    }

    #[test]
    fn nan_is_absorbed() {
        assert!(ExtReal::new(f64::NAN).is_neg_inf());
        assert_eq!(ExtReal::POS_INF.to_string(), "inf");
    }
}
