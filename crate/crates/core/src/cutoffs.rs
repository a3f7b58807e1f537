//! Piecewise-linear cut-offs on a collar and the slab cut-off `L1`.
//!
//! A collar is the shell `r/2 ≤ s ≤ r` around a cylinder of radius `ρ = r/2`,
//! described in a local frame where the axial coordinate runs over `[0,1]`.
//! Points are stored through their offset `d = s - ρ` from the inner wall so
//! that collars around cylinders of radius `2^-500` keep full relative precision.

use crate::error::{Error, Result};
use crate::geometry::mushroom::collar_part_ends;
use crate::geometry::CollarPart;

/// Explicit constant in the gradient bounds.
pub const GRADIENT_CONSTANT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollarCoords {
    /// Outer radius `r`; the inner radius is `r/2`.
    pub r: f64,
    /// `s - r/2`, in `[0, r/2]`.
    pub offset: f64,
    /// Local axial coordinate in `[0,1]`.
    pub xn: f64,
    /// `1 - xn`, kept separately so the upper end resolves as finely as the lower.
    pub top: f64,
}

impl CollarCoords {
    pub fn new(s: f64, xn: f64, r: f64) -> Result<Self> {
        Self::from_offset(s - r / 2.0, xn, r)
    }

    pub fn from_offset(offset: f64, xn: f64, r: f64) -> Result<Self> {
        Self::with_top(offset, xn, 1.0 - xn, r)
    }

    /// Like [`from_offset`](Self::from_offset) with the distance `top` to the
    /// upper end given exactly.
    pub fn with_top(offset: f64, xn: f64, top: f64, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid(format!("collar radius must lie in (0,1), got {r}")));
        }
        let rho = r / 2.0;
        if !(offset >= 0.0 && offset <= rho) || !(0.0..=1.0).contains(&xn) {
            return Err(Error::outside(
                "collar",
                format!("offset {offset:e}, xn {xn} with r = {r:e}"),
            ));
        }
        if !(0.0..=1.0).contains(&top) {
            return Err(Error::outside("collar", format!("distance to the top {top}")));
        }
        Ok(Self { r, offset, xn, top })
    }

    pub fn s(&self) -> f64 {
        self.r / 2.0 + self.offset
    }

    pub fn rho(&self) -> f64 {
        self.r / 2.0
    }

    pub fn part(&self) -> CollarPart {
        collar_part_ends(self.offset, self.xn, self.top, self.rho())
    }

    pub fn on_corner(&self) -> bool {
        self.offset == 0.0 && (self.xn == 0.0 || self.top == 0.0)
    }

    /// Distance to the nearer corner circle in the `(s, xn)` half-plane.
    pub fn corner_distance(&self) -> f64 {
        let a = self.xn.hypot(self.offset);
        let b = self.top.hypot(self.offset);
        a.min(b)
    }
}

/// Partial derivatives in the local frame: along the radial unit vector and
/// along the axis. Angular derivatives vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalGradient {
    pub ds: f64,
    pub dxn: f64,
}

impl LocalGradient {
    pub fn norm(&self) -> f64 {
        self.ds.hypot(self.dxn)
    }

    /// Cartesian vector of length `dir.len() + 1`, given the radial direction.
    pub fn cartesian(&self, dir: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = dir.iter().map(|d| d * self.ds).collect();
        g.push(self.dxn);
        g
    }

    fn neg(self) -> Self {
        Self {
            ds: -self.ds,
            dxn: -self.dxn,
        }
    }
}

/// Inner cut-off: 1 on the inner wall, 0 on the outer wall and end annuli.
pub fn eval_li(c: &CollarCoords) -> f64 {
    if c.on_corner() {
        return 0.0;
    }
    match c.part() {
        CollarPart::Side => 1.0 - 2.0 * c.offset / c.r,
        CollarPart::Lower => c.xn / (c.xn + c.offset),
        CollarPart::Upper => c.top / (c.top + c.offset),
    }
}

/// Outer cut-off, complementary to [`eval_li`] away from the corner circles.
pub fn eval_lo(c: &CollarCoords) -> f64 {
    if c.on_corner() {
        return 0.0;
    }
    match c.part() {
        CollarPart::Side => 2.0 * c.offset / c.r,
        CollarPart::Lower => c.offset / (c.xn + c.offset),
        CollarPart::Upper => c.offset / (c.top + c.offset),
    }
}

pub fn grad_li(c: &CollarCoords) -> Result<LocalGradient> {
    if c.on_corner() {
        return Err(Error::OnInterface(format!("corner circle at offset 0, xn {}", c.xn)));
    }
    Ok(match c.part() {
        CollarPart::Side => LocalGradient {
            ds: -2.0 / c.r,
            dxn: 0.0,
        },
        CollarPart::Lower => {
            let t = c.xn + c.offset;
            LocalGradient {
                ds: -c.xn / (t * t),
                dxn: c.offset / (t * t),
            }
        }
        CollarPart::Upper => {
            let w = c.top;
            let t = w + c.offset;
            LocalGradient {
                ds: -w / (t * t),
                dxn: -c.offset / (t * t),
            }
        }
    })
}

pub fn grad_lo(c: &CollarCoords) -> Result<LocalGradient> {
    grad_li(c).map(LocalGradient::neg)
}

/// Right-hand side of the gradient bound at `c`: `C/r` on the side part and
/// `C/l` in a wedge, with `l` the distance to the wedge's corner circle.
pub fn gradient_bound(c: &CollarCoords) -> f64 {
    match c.part() {
        CollarPart::Side => GRADIENT_CONSTANT / c.r,
        CollarPart::Lower => GRADIENT_CONSTANT / c.offset.hypot(c.xn),
        CollarPart::Upper => GRADIENT_CONSTANT / c.offset.hypot(c.top),
    }
}

/// Slab cut-off `2 - x_n`.
pub fn eval_l1(xn: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&xn) {
        return Err(Error::outside("slab", format!("x_n = {xn}")));
    }
    Ok(2.0 - xn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: f64, xn: f64, r: f64) -> CollarCoords {
        CollarCoords::new(s, xn, r).unwrap()
    }

    #[test]
    fn examples() {
        let r = 0.8;
        assert_eq!(eval_li(&c(0.4, 0.5, r)), 1.0);
        assert_eq!(eval_li(&c(0.8, 0.5, r)), 0.0);
        assert_eq!(eval_lo(&c(0.4, 0.5, r)), 0.0);
        assert_eq!(eval_lo(&c(0.8, 0.5, r)), 1.0);
        let dl = CollarCoords::from_offset(0.1, 0.1, r).unwrap();
        assert_eq!(dl.part(), CollarPart::Lower);
        assert!((eval_li(&dl) - 0.5).abs() < 1e-15);
        let dl = CollarCoords::from_offset(0.3, 0.1, 0.9).unwrap();
        assert_eq!(dl.part(), CollarPart::Lower);
        assert!((eval_lo(&dl) - 0.75).abs() < 1e-15);
        assert_eq!(eval_l1(1.0).unwrap(), 1.0);
        assert_eq!(eval_l1(2.0).unwrap(), 0.0);
        assert_eq!(eval_l1(1.25).unwrap(), 0.75);
        assert!(eval_l1(2.5).is_err());
    }

    #[test]
    fn gradient_examples() {
        let r = 0.5;
        let side = c(0.3, 0.5, r);
        assert_eq!(grad_li(&side).unwrap().ds.abs(), 2.0 / r);
        assert_eq!(grad_lo(&side).unwrap().ds.abs(), 2.0 / r);
        let t = 0.05;
        let dl = CollarCoords::from_offset(t, t, r).unwrap();
        assert!((grad_li(&dl).unwrap().ds.abs() - 1.0 / (4.0 * t)).abs() < 1e-12);
        let corner = CollarCoords::from_offset(0.0, 0.0, r).unwrap();
        assert!(grad_li(&corner).is_err());
        assert_eq!(eval_li(&corner), 0.0);
        assert!(CollarCoords::new(0.1, 0.5, r).is_err());
        assert!(CollarCoords::new(0.3, 1.5, r).is_err());
    }

    #[test]
    fn cartesian_gradient_has_no_angular_part() {
        let g = LocalGradient { ds: 2.0, dxn: -1.0 };
        let v = g.cartesian(&[0.6, 0.8]);
        assert_eq!(v, vec![1.2, 1.6, -1.0]);
        // tangential direction (-0.8, 0.6) has zero component
        assert!((v[0] * -0.8 + v[1] * 0.6).abs() < 1e-15);
    }

    fn fd(f: impl Fn(f64, f64) -> f64, off: f64, xn: f64, h: f64) -> (f64, f64) {
        (
            (f(off + h, xn) - f(off - h, xn)) / (2.0 * h),
            (f(off, xn + h) - f(off, xn - h)) / (2.0 * h),
        )
    }

    proptest! {
        #[test]
        fn partition_range_and_bounds(off in 0.0f64..=1.0, xn in 0.0f64..=1.0, r in 1e-6f64..0.99) {
            let cc = CollarCoords::from_offset(off * r / 2.0, xn, r).unwrap();
            let li = eval_li(&cc);
            let lo = eval_lo(&cc);
            prop_assert!((0.0..=1.0).contains(&li));
            prop_assert!((0.0..=1.0).contains(&lo));
            if !cc.on_corner() {
                prop_assert!((li + lo - 1.0).abs() <= 1e-12);
                let g = grad_li(&cc).unwrap();
                prop_assert!(g.norm() <= gradient_bound(&cc) * (1.0 + 1e-12));
                prop_assert!(grad_lo(&cc).unwrap().norm() <= gradient_bound(&cc) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn finite_differences(off in 0.05f64..0.95, xn in 0.05f64..0.95, r in 1e-3f64..0.9) {
            let rho = r / 2.0;
            let cc = CollarCoords::from_offset(off * rho, xn, r).unwrap();
            // keep a margin from the branch interfaces
            let margin = 1e-4 * rho;
            prop_assume!((cc.offset + cc.xn - rho).abs() > margin);
            prop_assume!((cc.offset + 1.0 - cc.xn - rho).abs() > margin);
            let h = 1e-7 * rho;
            let f = |o: f64, x: f64| eval_li(&CollarCoords { r, offset: o, xn: x, top: 1.0 - x });
            let (ds, dxn) = fd(f, cc.offset, cc.xn, h);
            let g = grad_li(&cc).unwrap();
            let err = (ds - g.ds).hypot(dxn - g.dxn) / g.norm();
            prop_assert!(err < 1e-6, "err {err}");
        }

        #[test]
        fn boundary_traces(xn in 0.0f64..=1.0, r in 1e-9f64..0.99) {
            let inner = CollarCoords::from_offset(0.0, xn, r).unwrap();
            let outer = CollarCoords::from_offset(r / 2.0, xn, r).unwrap();
            if xn > 0.0 && xn < 1.0 {
                prop_assert_eq!(eval_li(&inner), 1.0);
            }
            prop_assert!(eval_li(&outer).abs() < 1e-15);
            let off = xn * r / 2.0;
            let bottom = CollarCoords::from_offset(off, 0.0, r).unwrap();
            let top = CollarCoords::from_offset(off, 1.0, r).unwrap();
            prop_assert!(eval_li(&bottom).abs() < 1e-15);
            prop_assert!(eval_li(&top).abs() < 1e-15);
        }
    }
}
