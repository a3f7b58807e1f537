//! Parametrised integration shapes: tensor nodes and Monte Carlo draws.
//!
//! Weights are returned as `log2` values. Shapes around a cylinder of radius
//! `ρ = 2^{log2_rho}` are parametrised in units of `ρ`, so the powers of `ρ`
//! enter only through the `log2` weight and the local coordinates stay exact.

use rand::Rng;

use super::rules::{gauss_interval, sphere_rule};
use crate::field::{LocalCoords, Sample};
use crate::geometry::mushroom::collar_part;
use crate::geometry::{sphere_area, unit_ball_volume, CollarPart, Profile};
use crate::rng::unit_direction;

/// Cross-section radius of a solid of revolution about the first axis.
#[derive(Clone, Debug, PartialEq)]
pub enum RadiusFn {
    Zero,
    Profile(Profile),
    /// Section of the ball of the given radius centred at `(center, 0, ...)`.
    BallSection {
        center: f64,
        radius: f64,
    },
}

impl RadiusFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RadiusFn::Zero => 0.0,
            RadiusFn::Profile(p) => p.eval(t),
            RadiusFn::BallSection { center, radius } => {
                let d = t - center;
                (radius * radius - d * d).max(0.0).sqrt()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `inner·ρ < s < outer·ρ` around the axis through `center`, `x_n` in `axial`.
    /// Local axial coordinates are measured from `base`.
    Shell {
        center: Vec<f64>,
        log2_rho: f64,
        inner: f64,
        outer: f64,
        axial: (f64, f64),
        base: f64,
    },
    /// One piece of the collar `ρ < s < 2ρ`, `base < x_n < base + 1`.
    Collar {
        center: Vec<f64>,
        log2_rho: f64,
        base: f64,
        part: CollarPart,
    },
    /// `base` with the `holes` removed; the holes must lie inside `base`.
    Difference {
        base: Box<Shape>,
        holes: Vec<Shape>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `inner(t) < |z| < outer(t)` for `t` in `t`, points `(t, z)` in `R^dim`.
    Revolution {
        t: (f64, f64),
        inner: RadiusFn,
        outer: RadiusFn,
        dim: usize,
    },
    /// `(n-1)`-dimensional box in the plane `x_n = xn`.
    PlaneBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
        xn: f64,
    },
    /// `(n-1)`-dimensional shell `inner·ρ < s < outer·ρ` in the plane `x_n = xn`.
    PlaneShell {
        center: Vec<f64>,
        log2_rho: f64,
        inner: f64,
        outer: f64,
        xn: f64,
        base: f64,
    },
}

/// Node counts for one tensor evaluation.
#[derive(Clone, Copy, Debug)]
pub struct TensorRule {
    pub radial: usize,
    pub axial: usize,
    pub angular: usize,
    pub box_nodes: usize,
    pub grading_ratio: f64,
    pub grading_levels: usize,
    /// Integrate the angle exactly with a single direction.
    pub axisymmetric: bool,
}

pub type Node = (Sample, f64);

fn directions(d: usize, rule: &TensorRule) -> Vec<(Vec<f64>, f64)> {
    if rule.axisymmetric && d >= 2 {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        vec![(e, sphere_area(d))]
    } else {
        sphere_rule(d, rule.angular)
    }
}

fn cyl_point(center: &[f64], s: f64, dir: &[f64], xn: f64) -> Vec<f64> {
    let mut x: Vec<f64> = center.iter().zip(dir).map(|(c, d)| c + s * d).collect();
    x.push(xn);
    x
}

/// Collar point at offset `ρδ`; `end` is the local height measured from the
/// lower end, or from the upper end when `from_top` is set.
fn collar_sample(center: &[f64], rho: f64, delta: f64, dir: &[f64], base: f64, end: f64, from_top: bool) -> Sample {
    let (xn, top) = if from_top { (1.0 - end, end) } else { (end, 1.0 - end) };
    Sample {
        x: cyl_point(center, rho * (1.0 + delta), dir, base + xn),
        local: Some(LocalCoords {
            rho,
            offset: rho * delta,
            dir: dir.to_vec(),
            xn,
            top,
        }),
    }
}

fn box_nodes(lo: &[f64], hi: &[f64], m: usize) -> Vec<(Vec<f64>, f64)> {
    let rules: Vec<Vec<(f64, f64)>> = lo.iter().zip(hi).map(|(&a, &b)| gauss_interval(m, a, b)).collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for r in &rules {
        let mut next = Vec::with_capacity(out.len() * r.len());
        for (x, w) in &out {
            for &(t, wt) in r {
                let mut y = x.clone();
                y.push(t);
                next.push((y, w * wt));
            }
        }
        out = next;
    }
    out
}

/// Geometrically graded Gauss rule on `(0, len)` refined towards 0.
fn graded(len: f64, rule: &TensorRule) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut hi = len;
    for _ in 0..rule.grading_levels {
        let lo = hi * rule.grading_ratio;
        out.extend(gauss_interval(rule.radial, lo, hi));
        hi = lo;
    }
    out.extend(gauss_interval(rule.radial, 0.0, hi));
    out
}

impl Shape {
    /// Ambient dimension of the points this shape produces.
    pub fn dim(&self) -> usize {
        match self {
            Shape::Box { lo, .. } => lo.len(),
            Shape::Shell { center, .. } | Shape::Collar { center, .. } | Shape::PlaneShell { center, .. } => {
                center.len() + 1
            }
            Shape::Difference { base, .. } => base.dim(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Revolution { dim, .. } => *dim,
            Shape::PlaneBox { lo, .. } => lo.len() + 1,
        }
    }

    /// True for collar wedges, where the graded rule must converge.
    pub fn is_wedge(&self) -> bool {
        matches!(
            self,
            Shape::Collar {
                part: CollarPart::Lower | CollarPart::Upper,
                ..
            }
        )
    }

    /// Tensor-product nodes with `log2` weights. Not defined for `Difference`.
    pub fn tensor_nodes(&self, rule: &TensorRule) -> Vec<Node> {
        let mut out = Vec::new();
        match self {
            Shape::Box { lo, hi } => {
                for (x, w) in box_nodes(lo, hi, rule.box_nodes) {
                    out.push((Sample::plain(x), w.log2()));
                }
            }
            Shape::PlaneBox { lo, hi, xn } => {
                for (mut x, w) in box_nodes(lo, hi, rule.box_nodes) {
                    x.push(*xn);
                    out.push((Sample::plain(x), w.log2()));
                }
            }
            Shape::Shell {
                center,
                log2_rho,
                inner,
                outer,
                axial,
                base,
            } => {
                let d = center.len();
                let rho = log2_rho.exp2();
                let dirs = directions(d, rule);
                let radial = gauss_interval(rule.radial, *inner, *outer);
                let ax = gauss_interval(rule.axial, axial.0, axial.1);
                for &(sig, ws) in &radial {
                    let wr = ws * sig.powi(d as i32 - 1);
                    for &(xn, wa) in &ax {
                        for (dir, wd) in &dirs {
                            let sample = Sample {
                                x: cyl_point(center, rho * sig, dir, xn),
                                local: Some(LocalCoords {
                                    rho,
                                    offset: rho * (sig - 1.0),
                                    dir: dir.clone(),
                                    xn: xn - base,
                                    top: base + 1.0 - xn,
                                }),
                            };
                            out.push((sample, (wr * wa * wd).log2() + d as f64 * log2_rho));
                        }
                    }
                }
            }
            Shape::PlaneShell {
                center,
                log2_rho,
                inner,
                outer,
                xn,
                base,
            } => {
                let d = center.len();
                let rho = log2_rho.exp2();
                let dirs = directions(d, rule);
                for (sig, ws) in gauss_interval(rule.radial, *inner, *outer) {
                    let wr = ws * sig.powi(d as i32 - 1);
                    for (dir, wd) in &dirs {
                        let sample = Sample {
                            x: cyl_point(center, rho * sig, dir, *xn),
                            local: Some(LocalCoords {
                                rho,
                                offset: rho * (sig - 1.0),
                                dir: dir.clone(),
                                xn: xn - base,
                                top: base + 1.0 - xn,
                            }),
                        };
                        out.push((sample, (wr * wd).log2() + d as f64 * log2_rho));
                    }
                }
            }
            Shape::Collar {
                center,
                log2_rho,
                base,
                part,
            } => {
                let d = center.len();
                let n = d + 1;
                let rho = log2_rho.exp2();
                let dirs = directions(d, rule);
                let jac = |delta: f64| (1.0 + delta).powi(d as i32 - 1);
                match part {
                    CollarPart::Lower | CollarPart::Upper => {
                        // δ = λ(1-t), η = λt: λ graded towards the corner circle
                        for (t, wt) in gauss_interval(rule.axial, 0.0, 1.0) {
                            for (lam, wl) in graded(1.0, rule) {
                                let delta = lam * (1.0 - t);
                                let eta = lam * t;
                                let upper = *part == CollarPart::Upper;
                                let w = wt * wl * lam * jac(delta);
                                for (dir, wd) in &dirs {
                                    out.push((
                                        collar_sample(center, rho, delta, dir, *base, rho * eta, upper),
                                        (w * wd).log2() + n as f64 * log2_rho,
                                    ));
                                }
                            }
                        }
                    }
                    CollarPart::Side => {
                        // end triangles {eta < 1, delta > 1 - eta}
                        for (eta, we) in gauss_interval(rule.axial, 0.0, 1.0) {
                            for (v, wv) in gauss_interval(rule.radial, 0.0, 1.0) {
                                let delta = 1.0 - eta + eta * v;
                                let w = we * wv * eta * jac(delta);
                                for (dir, wd) in &dirs {
                                    let lw = (w * wd).log2() + n as f64 * log2_rho;
                                    out.push((collar_sample(center, rho, delta, dir, *base, rho * eta, false), lw));
                                    out.push((collar_sample(center, rho, delta, dir, *base, rho * eta, true), lw));
                                }
                            }
                        }
                        // middle band
                        for (xn_loc, wx) in gauss_interval(rule.axial, rho, 1.0 - rho) {
                            for (delta, wdl) in gauss_interval(rule.radial, 0.0, 1.0) {
                                let w = wx * wdl * jac(delta);
                                for (dir, wd) in &dirs {
                                    out.push((
                                        collar_sample(center, rho, delta, dir, *base, xn_loc, false),
                                        (w * wd).log2() + d as f64 * log2_rho,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            Shape::Ball { center, radius } => {
                let n = center.len();
                let rule_dirs = sphere_rule(n, rule.angular);
                for (r, wr) in gauss_interval(rule.radial.max(rule.axial), 0.0, *radius) {
                    let w = wr * r.powi(n as i32 - 1);
                    for (dir, wd) in &rule_dirs {
                        let x: Vec<f64> = center.iter().zip(dir).map(|(c, u)| c + r * u).collect();
                        out.push((Sample::plain(x), (w * wd).log2()));
                    }
                }
            }
            Shape::Revolution { t, inner, outer, dim } => {
                let d = dim - 1;
                let dirs = sphere_rule(d, rule.angular);
                for (tt, wt) in gauss_interval(rule.axial, t.0, t.1) {
                    let (a, b) = (inner.eval(tt), outer.eval(tt));
                    if b <= a {
                        continue;
                    }
                    for (s, ws) in gauss_interval(rule.radial, a, b) {
                        let w = wt * ws * s.powi(d as i32 - 1);
                        for (dir, wd) in &dirs {
                            let mut x = vec![tt];
                            x.extend(dir.iter().map(|u| s * u));
                            out.push((Sample::plain(x), (w * wd).log2()));
                        }
                    }
                }
            }
            Shape::Difference { .. } => {}
        }
        out
    }

    /// One Monte Carlo draw: a sample and the `log2` of its importance weight,
    /// so that the mean of `weight · f` estimates the integral. A weight of
    /// `-inf` marks a rejected draw. Not defined for `Difference`.
    pub fn mc_draw<R: Rng>(&self, rng: &mut R) -> Node {
        match self {
            Shape::Box { lo, hi } => {
                let x: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                    .collect();
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                (Sample::plain(x), vol.log2())
            }
            Shape::PlaneBox { lo, hi, xn } => {
                let mut x: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                    .collect();
                x.push(*xn);
                let area: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                (Sample::plain(x), area.log2())
            }
            Shape::Shell {
                center,
                log2_rho,
                inner,
                outer,
                axial,
                base,
            } => {
                let d = center.len();
                let rho = log2_rho.exp2();
                let (sig, area) = shell_radius(rng, d, *inner, *outer);
                let dir = unit_direction(rng, d);
                let xn = axial.0 + (axial.1 - axial.0) * rng.random::<f64>();
                let sample = Sample {
                    x: cyl_point(center, rho * sig, &dir, xn),
                    local: Some(LocalCoords {
                        rho,
                        offset: rho * (sig - 1.0),
                        dir,
                        xn: xn - base,
                        top: base + 1.0 - xn,
                    }),
                };
                (sample, (area * (axial.1 - axial.0)).log2() + d as f64 * log2_rho)
            }
            Shape::PlaneShell {
                center,
                log2_rho,
                inner,
                outer,
                xn,
                base,
            } => {
                let d = center.len();
                let rho = log2_rho.exp2();
                let (sig, area) = shell_radius(rng, d, *inner, *outer);
                let dir = unit_direction(rng, d);
                let sample = Sample {
                    x: cyl_point(center, rho * sig, &dir, *xn),
                    local: Some(LocalCoords {
                        rho,
                        offset: rho * (sig - 1.0),
                        dir,
                        xn: xn - base,
                        top: base + 1.0 - xn,
                    }),
                };
                (sample, area.log2() + d as f64 * log2_rho)
            }
            Shape::Collar {
                center,
                log2_rho,
                base,
                part,
            } => {
                let d = center.len();
                let n = d + 1;
                let rho = log2_rho.exp2();
                let dir = unit_direction(rng, d);
                let area = sphere_area(d);
                match part {
                    CollarPart::Lower | CollarPart::Upper => {
                        let t: f64 = rng.random();
                        let lam: f64 = rng.random();
                        let delta = lam * (1.0 - t);
                        let eta = lam * t;
                        let w = lam * (1.0 + delta).powi(d as i32 - 1) * area;
                        (
                            collar_sample(center, rho, delta, &dir, *base, rho * eta, *part == CollarPart::Upper),
                            w.log2() + n as f64 * log2_rho,
                        )
                    }
                    CollarPart::Side => {
                        let delta: f64 = rng.random();
                        let xn_loc: f64 = rng.random();
                        let sample = collar_sample(center, rho, delta, &dir, *base, xn_loc, false);
                        if collar_part(rho * delta, xn_loc, rho) != CollarPart::Side {
                            return (sample, f64::NEG_INFINITY);
                        }
                        let w = (1.0 + delta).powi(d as i32 - 1) * area;
                        (sample, w.log2() + d as f64 * log2_rho)
                    }
                }
            }
            Shape::Ball { center, radius } => {
                let n = center.len();
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                let dir = unit_direction(rng, n);
                let x: Vec<f64> = center.iter().zip(&dir).map(|(c, u)| c + r * u).collect();
                (Sample::plain(x), (unit_ball_volume(n) * radius.powi(n as i32)).log2())
            }
            Shape::Revolution { t, inner, outer, dim } => {
                let d = dim - 1;
                let tt = t.0 + (t.1 - t.0) * rng.random::<f64>();
                let (a, b) = (inner.eval(tt), outer.eval(tt));
                let dir = unit_direction(rng, d);
                if b <= a {
                    let mut x = vec![tt];
                    x.extend(dir.iter().map(|u| a * u));
                    return (Sample::plain(x), f64::NEG_INFINITY);
                }
                let (s, area) = shell_radius(rng, d, a, b);
                let mut x = vec![tt];
                x.extend(dir.iter().map(|u| s * u));
                (Sample::plain(x), (area * (t.1 - t.0)).log2())
            }
            Shape::Difference { .. } => (Sample::plain(Vec::new()), f64::NEG_INFINITY),
        }
    }
}

/// Radius drawn uniformly by volume from the shell `a < s < b` in `R^d`,
/// together with the shell's `d`-volume.
fn shell_radius<R: Rng>(rng: &mut R, d: usize, a: f64, b: f64) -> (f64, f64) {
    let (ad, bd) = (a.powi(d as i32), b.powi(d as i32));
    let u: f64 = rng.random();
    let s = (ad + (bd - ad) * u).powf(1.0 / d as f64);
    (s, unit_ball_volume(d) * (bd - ad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mushroom::collar_piece_measure;

    fn rule() -> TensorRule {
        TensorRule {
            radial: 10,
            axial: 10,
            angular: 10,
            box_nodes: 6,
            grading_ratio: 0.2,
            grading_levels: 12,
            axisymmetric: false,
        }
    }

    fn volume(shape: &Shape) -> f64 {
        shape.tensor_nodes(&rule()).iter().map(|(_, w)| w.exp2()).sum()
    }

    #[test]
    fn tensor_volumes() {
        for n in 3..6 {
            let c = vec![0.5; n - 1];
            for part in CollarPart::ALL {
                let s = Shape::Collar {
                    center: c.clone(),
                    log2_rho: -3.0,
                    base: 1.0,
                    part,
                };
                let exact = collar_piece_measure(n, -3.0, part).linear;
                assert!(
                    (volume(&s) - exact).abs() < 1e-12 * exact,
                    "n={n} {part:?} {} {}",
                    volume(&s),
                    exact
                );
            }
            let shell = Shape::Shell {
                center: c.clone(),
                log2_rho: -5.0,
                inner: 0.0,
                outer: 1.0,
                axial: (1.0, 2.0),
                base: 1.0,
            };
            let exact = unit_ball_volume(n - 1) * (1.0f64 / 32.0).powi(n as i32 - 1);
            assert!((volume(&shell) - exact).abs() < 1e-12 * exact);
        }
        let ball = Shape::Ball {
            center: vec![0.0; 3],
            radius: 2.0,
        };
        assert!((volume(&ball) - 32.0 * std::f64::consts::PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn tiny_collar_keeps_local_precision() {
        let s = Shape::Collar {
            center: vec![0.3, 0.3],
            log2_rho: -400.0,
            base: 1.0,
            part: CollarPart::Lower,
        };
        let nodes = s.tensor_nodes(&rule());
        for (sample, w) in &nodes {
            let l = sample.local.as_ref().unwrap();
            assert!(l.offset > 0.0 && l.offset < l.rho);
            assert!(l.xn > 0.0 && l.xn < l.rho);
            assert!(w.is_finite());
        }
        let total = crate::logspace::log2_sum(&nodes.iter().map(|n| n.1).collect::<Vec<_>>());
        let exact = collar_piece_measure(3, -400.0, CollarPart::Lower).log2;
        assert!((total - exact).abs() < 1e-12);
    }
}
