//! Double-double accumulator.
//!
//! Values are kept as an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
//! which gives roughly 106 bits of significand. Sums of integer-valued data
//! stay exact far beyond 2^53, so aggregates merged in different orders agree
//! bit for bit on such data.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Compensated {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Compensated {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact square of `x`.
    pub fn square(x: f64) -> Self {
        let (hi, lo) = two_prod(x, x);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }

    pub fn hi(self) -> f64 {
        self.hi
    }
}

impl Add for Compensated {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = fast_two_sum(s, e + t);
        let (hi, lo) = fast_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for Compensated {
    type Output = Self;

    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Compensated {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for Compensated {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = fast_two_sum(p, e);
        Self { hi, lo }
    }
}

impl From<f64> for Compensated {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_bits() {
        let big = Compensated::new(1e16);
        let s = big + Compensated::new(1.0) + Compensated::new(1.0) - big;
        assert_eq!(s.value(), 2.0);
        // plain f64 loses both ones
        assert_eq!(1e16 + 1.0 + 1.0 - 1e16, 0.0);
    }

    #[test]
    fn square_is_exact() {
        let x = 1e6 + 0.1;
        let sq = Compensated::square(x);
        let diff = sq - Compensated::product(x, x);
        assert!(diff.is_zero());
        assert!((sq.value() - x * x).abs() <= f64::EPSILON * x * x);
    }

    #[test]
    fn variance_of_offset_data() {
        // n * sum(x^2) - sum(x)^2 for {1e8, 1e8 + 1}: exact value 1
        let xs = [1e8, 1e8 + 1.0];
        let (mut s, mut s2) = (Compensated::ZERO, Compensated::ZERO);
        for x in xs {
            s = s + Compensated::new(x);
            s2 = s2 + Compensated::square(x);
        }
        let d = Compensated::new(2.0) * s2 - s * s;
        assert_eq!(d.value(), 1.0);
    }
}
