//! A box with a row of shrinking cylinders hanging below its bottom face.

use std::fmt;

use serde::Serialize;

use super::{distance, unit_ball_volume};
use crate::error::{Error, Result};
use crate::logspace::Log2Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CombTag {
    Box,
    /// Upper half `x_n ∈ (-1/2, 0]` of cylinder `k`.
    Cyl(usize),
    /// Lower half `x_n ∈ [-1, -1/2]` of cylinder `k`.
    HalfCyl(usize),
    Outside,
}

impl fmt::Display for CombTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CombTag::Box => write!(f, "box"),
            CombTag::Cyl(k) => write!(f, "cyl:{k}"),
            CombTag::HalfCyl(k) => write!(f, "half_cyl:{k}"),
            CombTag::Outside => write!(f, "outside"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombSpec {
    pub n: usize,
    pub kmax: usize,
    pub aspect_shrink: bool,
    /// Upper corner of the box `[0, box_hi[i]]`.
    pub box_hi: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub log2_radius: Vec<f64>,
}

impl CombSpec {
    /// Standard comb: box `[0,20]×[0,1]^{n-1}`, cylinder `k` centred at
    /// `1 + 30·Σ_{j=2}^k 2^{-j}` with radius `2^{-k-1}`.
    ///
    /// With `aspect_shrink` the box is the unit cube, centres sit at
    /// `(1 - 2^{-k}, 1/2, ...)` and radii are `2^{-k-3}`, so every cylinder
    /// still has unit height while its width goes to zero inside a bounded base.
    pub fn build(n: usize, kmax: usize, aspect_shrink: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("n must be at least 3, got {n}")));
        }
        if kmax < 1 {
            return Err(Error::invalid("kmax must be at least 1"));
        }
        let (box_hi, centers, log2_radius) = if aspect_shrink {
            let hi = vec![1.0; n];
            let centers = (1..=kmax)
                .map(|k| {
                    let mut z = vec![0.5; n - 1];
                    z[0] = 1.0 - (-(k as f64)).exp2();
                    z
                })
                .collect();
            let radii = (1..=kmax).map(|k| -(k as f64) - 3.0).collect();
            (hi, centers, radii)
        } else {
            let mut hi = vec![1.0; n];
            hi[0] = 20.0;
            let mut centers = Vec::with_capacity(kmax);
            let mut x = 1.0;
            for k in 1..=kmax {
                if k >= 2 {
                    x += 30.0 * (-(k as f64)).exp2();
                }
                let mut z = vec![0.0; n - 1];
                z[0] = x;
                centers.push(z);
            }
            let radii = (1..=kmax).map(|k| -(k as f64) - 1.0).collect();
            (hi, centers, radii)
        };
        Ok(Self {
            n,
            kmax,
            aspect_shrink,
            box_hi,
            centers,
            log2_radius,
        })
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k - 1]
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.log2_radius[k - 1].exp2()
    }

    pub fn classify(&self, x: &[f64]) -> CombTag {
        let n = self.n;
        if x.len() != n {
            return CombTag::Outside;
        }
        let xn = x[n - 1];
        let in_box = x.iter().zip(&self.box_hi).all(|(&v, &hi)| v > 0.0 && v < hi);
        if in_box {
            return CombTag::Box;
        }
        if (-1.0..=0.0).contains(&xn) {
            for k in 1..=self.kmax {
                if distance(&x[..n - 1], self.center(k)) <= self.radius(k) {
                    return if xn > -0.5 {
                        CombTag::Cyl(k)
                    } else {
                        CombTag::HalfCyl(k)
                    };
                }
            }
        }
        CombTag::Outside
    }

    /// Volume of one half of cylinder `k`.
    pub fn half_cylinder_measure(&self, k: usize) -> Log2Value {
        let d = (self.n - 1) as f64;
        Log2Value::from_log2(unit_ball_volume(self.n - 1).log2() + d * self.log2_radius[k - 1] - 1.0)
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "kmax": self.kmax,
            "aspect_shrink": self.aspect_shrink,
            "derived": {
                "box_hi": self.box_hi,
                "z": self.centers,
                "log2_radius": self.log2_radius,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centres_and_tags() {
        let c = CombSpec::build(3, 6, false).unwrap();
        assert_eq!(c.center(1), &[1.0, 0.0]);
        assert_eq!(c.center(2), &[8.5, 0.0]);
        assert_eq!(c.classify(&[10.0, 0.5, 0.5]), CombTag::Box);
        assert_eq!(c.classify(&[1.0, 0.0, -0.75]), CombTag::HalfCyl(1));
        assert_eq!(c.classify(&[1.0, 0.1, -0.25]), CombTag::Cyl(1));
        assert_eq!(c.classify(&[5.0, 0.0, -0.25]), CombTag::Outside);
        assert_eq!(c.classify(&[1.0, 0.0, -1.25]), CombTag::Outside);
    }

    #[test]
    fn consecutive_cylinders_are_disjoint() {
        let c = CombSpec::build(3, 40, false).unwrap();
        for k in 1..40 {
            let gap = distance(c.center(k), c.center(k + 1));
            assert!((gap - 30.0 * (-(k as f64 + 1.0)).exp2()).abs() < 1e-12);
            assert!(gap > c.radius(k) + c.radius(k + 1));
        }
        let s = CombSpec::build(4, 20, true).unwrap();
        for k in 1..20 {
            let gap = distance(s.center(k), s.center(k + 1));
            assert!(gap > s.radius(k) + s.radius(k + 1));
            assert!(s.center(k)[0] + s.radius(k) < 1.0);
        }
    }
}
