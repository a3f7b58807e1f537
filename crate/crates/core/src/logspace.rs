//! Base-2 logarithmic arithmetic for quantities that under- or overflow `f64`.
//!
//! Radii such as `r_k = 2^{-11k}` and field values such as `(4^k)^{(n-1)/q}`
//! leave the representable range long before the geometry stops being
//! meaningful, so every measure and norm contribution is carried as a `log2`
//! value next to its (possibly flushed) linear value.

use serde::{Deserialize, Serialize};

/// `log2(2^a + 2^b)`.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// `log2(2^a - 2^b)` for `a >= b`; returns `-inf` when the difference vanishes
/// and NaN when `b > a`.
pub fn log2_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b > a {
        return f64::NAN;
    }
    let d = 1.0 - (b - a).exp2();
    if d <= 0.0 {
        f64::NEG_INFINITY
    } else {
        a + d.log2()
    }
}

/// Stable `log2(sum_i 2^{x_i})`.
pub fn log2_sum(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max.is_infinite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp2()).sum();
    max + s.log2()
}

/// Weighted variant: `log2(sum_i 2^{w_i + x_i})` with the pairs given as `(w_i, x_i)`.
pub fn log2_weighted_sum(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let terms: Vec<f64> = pairs.map(|(w, x)| w + x).collect();
    log2_sum(&terms)
}

/// A nonnegative quantity stored in linear and `log2` form. The `log2` field is
/// authoritative; `linear` may have flushed to zero or saturated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Log2Value {
    pub linear: f64,
    pub log2: f64,
}

impl Log2Value {
    pub fn from_log2(log2: f64) -> Self {
        Self {
            linear: log2.exp2(),
            log2,
        }
    }

    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            log2: linear.log2(),
        }
    }

    pub fn zero() -> Self {
        Self {
            linear: 0.0,
            log2: f64::NEG_INFINITY,
        }
    }

    pub fn powf(self, p: f64) -> Self {
        if self.log2 == f64::NEG_INFINITY {
            return Self::zero();
        }
        Self::from_log2(self.log2 * p)
    }
}

impl std::ops::Add for Log2Value {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self::from_log2(log2_add(self.log2, other.log2))
    }
}

impl std::ops::Mul for Log2Value {
    type Output = Self;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, other: Self) -> Self {
        Self::from_log2(self.log2 + other.log2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_matches_linear() {
        let a = 3.0f64;
        let b = 5.0f64;
        assert!((log2_add(a.log2(), b.log2()).exp2() - 8.0).abs() < 1e-12);
        assert_eq!(log2_add(f64::NEG_INFINITY, 2.0), 2.0);
    }

    #[test]
    fn sum_survives_underflow() {
        let vals = [-2000.0, -2000.0, -2001.0];
        let s = log2_sum(&vals);
        assert!((s - (-2000.0 + 2.5f64.log2())).abs() < 1e-12);
        assert_eq!(log2_sum(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn sub_and_flush() {
        assert!((log2_sub(3.0, 2.0) - 2.0).abs() < 1e-12);
        assert_eq!(log2_sub(1.0, 1.0), f64::NEG_INFINITY);
        assert!(log2_sub(1.0, 2.0).is_nan());
        let v = Log2Value::from_log2(-1100.0);
        assert_eq!(v.linear, 0.0);
        assert_eq!(v.log2, -1100.0);
    }
}
