//! Reflections used by the extension: the slab reflection `R1` and the
//! collar maps that fold the shell `ρ < s < 2ρ` onto `ρ/2 < s' < ρ`.

use crate::error::{Error, Result};
use crate::geometry::MushroomSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReflectionKind {
    SlabR1,
    HeadR(usize),
    StemR(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian {
    /// `|det D map|`.
    pub det: f64,
    /// Upper bound for the operator norm of `D map`.
    pub opnorm_bound: f64,
}

/// `R1(x) = (x̌, 2 - x_n)`.
pub fn reflect_slab(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let n = y.len();
    y[n - 1] = 2.0 - y[n - 1];
    y
}

/// Image radius `s' = -s/2 + 3ρ/2` written in terms of the offset `s - ρ`.
pub fn collar_image_radius(offset: f64, rho: f64) -> f64 {
    rho - offset / 2.0
}

/// Ratio `s'/s` from the relative offset `δ = (s - ρ)/ρ`.
pub fn collar_ratio(delta: f64) -> f64 {
    (1.0 - delta / 2.0) / (1.0 + delta)
}

/// `|J| = (1/2)(s'/s)^{n-2}`.
pub fn collar_det(n: usize, delta: f64) -> f64 {
    0.5 * collar_ratio(delta).powi(n as i32 - 2)
}

/// Applies the transpose of the collar differential to a gradient `g` taken
/// at the image point. `dir` is the radial unit vector, `ratio = s'/s`.
/// The differential is symmetric: `-1/2` along `dir`, `ratio` across it, and
/// the identity along the axis.
pub fn collar_pullback(dir: &[f64], ratio: f64, g: &[f64]) -> Vec<f64> {
    let m = dir.len();
    let radial: f64 = dir.iter().zip(&g[..m]).map(|(d, v)| d * v).sum();
    let mut out: Vec<f64> = (0..m)
        .map(|i| -0.5 * radial * dir[i] + ratio * (g[i] - radial * dir[i]))
        .collect();
    out.push(g[m]);
    out
}

fn collar_frame(spec: &MushroomSpec, kind: ReflectionKind) -> Option<(usize, f64, (f64, f64))> {
    match kind {
        ReflectionKind::HeadR(k) if k >= 1 && k <= spec.m => Some((k, spec.head_radius(k), (2.0, 3.0))),
        ReflectionKind::StemR(k) if k >= 1 && k <= spec.m => Some((k, spec.stem_radius(k), (1.0, 2.0))),
        _ => None,
    }
}

fn check_collar(spec: &MushroomSpec, kind: ReflectionKind, x: &[f64]) -> Result<(usize, f64, f64)> {
    if x.len() != spec.n {
        return Err(Error::invalid(format!("point needs {} coordinates", spec.n)));
    }
    let (k, rho, (a, b)) =
        collar_frame(spec, kind).ok_or_else(|| Error::invalid(format!("{kind:?} not defined for m = {}", spec.m)))?;
    let s = spec.radial(k, x);
    let xn = x[spec.n - 1];
    if !(s > rho && s < 2.0 * rho) || !(a..=b).contains(&xn) {
        return Err(Error::outside(
            "collar map",
            format!("{kind:?} at s = {s:e}, x_n = {xn}"),
        ));
    }
    Ok((k, rho, s))
}

fn check_slab(spec: &MushroomSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.n {
        return Err(Error::invalid(format!("point needs {} coordinates", spec.n)));
    }
    let xn = x[spec.n - 1];
    if !(0.0..=2.0).contains(&xn) || x[..spec.n - 1].iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::outside("slab reflection", format!("x = {x:?}")));
    }
    Ok(())
}

/// Applies a reflection. `R1` accepts the slab together with its image, the
/// closed box `[0,1]^{n-1} × [0,2]`, where it is an involution; collar maps
/// accept the open annulus times the closed axial interval.
pub fn apply(spec: &MushroomSpec, kind: ReflectionKind, x: &[f64]) -> Result<Vec<f64>> {
    match kind {
        ReflectionKind::SlabR1 => {
            check_slab(spec, x)?;
            Ok(reflect_slab(x))
        }
        _ => {
            let (k, rho, s) = check_collar(spec, kind, x)?;
            let z = spec.center(k);
            let s_img = collar_image_radius(s - rho, rho);
            let mut y: Vec<f64> = (0..spec.n - 1).map(|i| z[i] + (x[i] - z[i]) * (s_img / s)).collect();
            y.push(x[spec.n - 1]);
            Ok(y)
        }
    }
}

pub fn jacobian(spec: &MushroomSpec, kind: ReflectionKind, x: &[f64]) -> Result<Jacobian> {
    match kind {
        ReflectionKind::SlabR1 => {
            check_slab(spec, x)?;
            Ok(Jacobian {
                det: 1.0,
                opnorm_bound: 1.0,
            })
        }
        _ => {
            let (_, rho, s) = check_collar(spec, kind, x)?;
            Ok(Jacobian {
                det: collar_det(spec.n, (s - rho) / rho),
                opnorm_bound: 1.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> MushroomSpec {
        MushroomSpec::build(3, 5.0, 1.0, 3).unwrap()
    }

    #[test]
    fn examples() {
        let s = spec();
        let y = apply(&s, ReflectionKind::SlabR1, &[0.3, 0.3, 1.25]).unwrap();
        assert_eq!(y, vec![0.3, 0.3, 0.75]);
        let back = apply(&s, ReflectionKind::SlabR1, &y).unwrap();
        assert_eq!(back, vec![0.3, 0.3, 1.25]);
        let x = [0.25 + 0.3, 0.25, 2.5];
        let y = apply(&s, ReflectionKind::HeadR(1), &x).unwrap();
        assert!((s.radial(1, &y) - 0.225).abs() < 1e-15);
        assert!(apply(&s, ReflectionKind::HeadR(1), &[0.3, 0.25, 2.5]).is_err());
        assert!(apply(&s, ReflectionKind::SlabR1, &[0.3, 0.3, 2.5]).is_err());
        assert_eq!(
            jacobian(&s, ReflectionKind::SlabR1, &[0.3, 0.3, 1.25]).unwrap().det,
            1.0
        );
    }

    #[test]
    fn determinant_at_the_walls() {
        assert!((collar_det(3, 0.0) - 0.5).abs() < 1e-15);
        assert!((collar_det(3, 1.0) - 0.125).abs() < 1e-15);
    }

    /// Finite-difference determinant of the Cartesian head map.
    fn fd_det(s: &MushroomSpec, k: usize, x: &[f64]) -> f64 {
        let h = 1e-6 * s.head_radius(k);
        let mut m = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let yp = apply(s, ReflectionKind::HeadR(k), &xp).unwrap();
            let ym = apply(s, ReflectionKind::HeadR(k), &xm).unwrap();
            for i in 0..3 {
                m[i][j] = (yp[i] - ym[i]) / (2.0 * h);
            }
        }
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    proptest! {
        #[test]
        fn head_map_properties(k in 1usize..=3, delta in 0.01f64..0.99, theta in 0.0f64..std::f64::consts::TAU, xn in 2.01f64..2.99) {
            let s = spec();
            let rho = s.head_radius(k);
            let z = s.center(k);
            let sr = rho * (1.0 + delta);
            let x = [z[0] + sr * theta.cos(), z[1] + sr * theta.sin(), xn];
            let j = jacobian(&s, ReflectionKind::HeadR(k), &x).unwrap();
            prop_assert!(j.det >= 0.125 - 1e-15 && j.det <= 0.5 + 1e-15);
            let fd = fd_det(&s, k, &x);
            prop_assert!((fd.abs() - j.det).abs() / j.det < 1e-6);
            let y = apply(&s, ReflectionKind::HeadR(k), &x).unwrap();
            let sy = s.radial(k, &y);
            prop_assert!(sy >= rho / 2.0 * (1.0 - 1e-12) && sy <= rho * (1.0 + 1e-12));
            prop_assert_eq!(y[2], xn);
        }

        #[test]
        fn pullback_matches_chain_rule(delta in 0.01f64..0.99, theta in 0.0f64..std::f64::consts::TAU, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            // f(y) = a*y1 + b*y2 + y3^2; compare D^T grad f with finite differences of f∘map
            let s = spec();
            let rho = s.head_radius(1);
            let z = s.center(1);
            let sr = rho * (1.0 + delta);
            let x = [z[0] + sr * theta.cos(), z[1] + sr * theta.sin(), 2.5];
            let f = |y: &[f64]| a * y[0] + b * y[1] + y[2] * y[2];
            let y = apply(&s, ReflectionKind::HeadR(1), &x).unwrap();
            let gy = [a, b, 2.0 * y[2]];
            let dir = [theta.cos(), theta.sin()];
            let pulled = collar_pullback(&dir, collar_ratio(delta), &gy);
            let h = 1e-6 * rho;
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let d = (f(&apply(&s, ReflectionKind::HeadR(1), &xp).unwrap())
                    - f(&apply(&s, ReflectionKind::HeadR(1), &xm).unwrap())) / (2.0 * h);
                prop_assert!((d - pulled[i]).abs() < 1e-6 * (1.0 + d.abs()));
            }
        }
    }
}
