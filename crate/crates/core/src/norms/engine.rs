//! Region-parallel integration in `log2` space.

use rayon::prelude::*;

use super::shapes::{Node, Shape, TensorRule};
use super::{Method, QuadratureSpec, Region};
use crate::error::{Error, Result};
use crate::field::Sample;
use crate::geometry::RegionLabel;
use crate::logspace::{log2_sub, log2_sum};
use crate::rng::{stream, CHUNK};

/// An integral as `log2` value plus relative error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub log2: f64,
    pub rel_err: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        log2: f64::NEG_INFINITY,
        rel_err: 0.0,
    };

    pub fn value(&self) -> f64 {
        self.log2.exp2()
    }

    pub fn stderr(&self) -> f64 {
        if self.rel_err == 0.0 {
            0.0
        } else {
            (self.log2 + self.rel_err.log2()).exp2()
        }
    }
}

fn bad_sample(label: &RegionLabel, s: &Sample, v: f64) -> Error {
    Error::Numerical(format!("integrand is {v} in region {label} at x = {:?}", s.x))
}

fn eval<const K: usize, F>(f: &F, label: &RegionLabel, node: &Node) -> Result<[f64; K]>
where
    F: Fn(&RegionLabel, &Sample) -> Result<[f64; K]>,
{
    let (s, w) = node;
    let mut v = f(label, s)?;
    for vi in v.iter_mut() {
        if vi.is_nan() || *vi == f64::INFINITY {
            return Err(bad_sample(label, s, *vi));
        }
        *vi += w;
    }
    Ok(v)
}

fn tensor_sum<const K: usize, F>(shape: &Shape, label: &RegionLabel, rule: &TensorRule, f: &F) -> Result<[f64; K]>
where
    F: Fn(&RegionLabel, &Sample) -> Result<[f64; K]>,
{
    let nodes = shape.tensor_nodes(rule);
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(nodes.len()); K];
    for node in &nodes {
        let v = eval(f, label, node)?;
        for (c, x) in cols.iter_mut().zip(v) {
            c.push(x);
        }
    }
    let mut out = [f64::NEG_INFINITY; K];
    for (o, c) in out.iter_mut().zip(&cols) {
        *o = log2_sum(c);
    }
    Ok(out)
}

fn coarse(rule: &TensorRule) -> TensorRule {
    let shrink = |m: usize| (2 * m).div_ceil(3).max(1);
    TensorRule {
        radial: shrink(rule.radial),
        axial: shrink(rule.axial),
        angular: shrink(rule.angular),
        box_nodes: shrink(rule.box_nodes),
        grading_levels: shrink(rule.grading_levels),
        ..*rule
    }
}

fn tensor_simple<const K: usize, F>(
    shape: &Shape,
    label: &RegionLabel,
    quad: &QuadratureSpec,
    axisymmetric: bool,
    f: &F,
) -> Result<[Estimate; K]>
where
    F: Fn(&RegionLabel, &Sample) -> Result<[f64; K]>,
{
    let rule = quad.tensor_rule(axisymmetric);
    let fine = tensor_sum(shape, label, &rule, f)?;
    let mut out = [Estimate::ZERO; K];
    if !quad.error_estimate {
        for (o, v) in out.iter_mut().zip(fine) {
            o.log2 = v;
        }
        return Ok(out);
    }
    let rough = tensor_sum(shape, label, &coarse(&rule), f)?;
    // wedges also get a rule that differs only in grading depth
    let shallow = if shape.is_wedge() {
        let r = TensorRule {
            grading_levels: (2 * rule.grading_levels).div_ceil(3),
            ..rule
        };
        Some(tensor_sum(shape, label, &r, f)?)
    } else {
        None
    };
    let rel = |a: f64, b: f64| {
        if a == f64::NEG_INFINITY {
            if b == f64::NEG_INFINITY {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (1.0 - (b - a).exp2()).abs()
        }
    };
    for i in 0..K {
        let mut err = rel(fine[i], rough[i]);
        if let Some(sh) = &shallow {
            let g = rel(fine[i], sh[i]);
            if g > quad.target_rel_error {
                return Err(Error::Numerical(format!(
                    "graded quadrature did not converge in region {label}: relative change {g:.3e} exceeds {:.1e}",
                    quad.target_rel_error
                )));
            }
            err = err.max(g);
        }
        out[i] = Estimate {
            log2: fine[i],
            rel_err: err,
        };
    }
    Ok(out)
}

/// Running max-scaled first and second moments of `log2` draws.
#[derive(Clone, Copy)]
struct Moments {
    max: f64,
    s1: f64,
    s2: f64,
}

impl Moments {
    const EMPTY: Moments = Moments {
        max: f64::NEG_INFINITY,
        s1: 0.0,
        s2: 0.0,
    };

    fn from_draws(v: &[f64]) -> Self {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Self::EMPTY;
        }
        let (mut s1, mut s2) = (0.0, 0.0);
        for &x in v {
            let e = (x - max).exp2();
            s1 += e;
            s2 += e * e;
        }
        Self { max, s1, s2 }
    }

    fn merge(self, o: Self) -> Self {
        if o.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return o;
        }
        let max = self.max.max(o.max);
        let (a, b) = ((self.max - max).exp2(), (o.max - max).exp2());
        Self {
            max,
            s1: self.s1 * a + o.s1 * b,
            s2: self.s2 * a * a + o.s2 * b * b,
        }
    }

    fn estimate(&self, n: u64) -> Estimate {
        if self.max == f64::NEG_INFINITY || self.s1 == 0.0 {
            return Estimate::ZERO;
        }
        let nf = n as f64;
        let m1 = self.s1 / nf;
        let m2 = self.s2 / nf;
        let var = (m2 - m1 * m1).max(0.0);
        let se = if n > 1 {
            (var / (nf - 1.0)).sqrt()
        } else {
            f64::INFINITY
        };
        Estimate {
            log2: self.max + m1.log2(),
            rel_err: se / m1,
        }
    }
}

fn mc_simple<const K: usize, F>(
    shape: &Shape,
    label: &RegionLabel,
    quad: &QuadratureSpec,
    stream_id: u32,
    f: &F,
) -> Result<[Estimate; K]>
where
    F: Fn(&RegionLabel, &Sample) -> Result<[f64; K]> + Sync,
{
    let n = quad.samples.max(2);
    let chunks = n.div_ceil(CHUNK as u64) as u32;
    let per_chunk: Vec<[Moments; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(quad.seed, stream_id, c);
            let count = (n - c as u64 * CHUNK as u64).min(CHUNK as u64) as usize;
            let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(count); K];
            for _ in 0..count {
                let node = shape.mc_draw(&mut rng);
                let v = if node.1 == f64::NEG_INFINITY {
                    [f64::NEG_INFINITY; K]
                } else {
                    eval(f, label, &node)?
                };
                for (col, x) in cols.iter_mut().zip(v) {
                    col.push(x);
                }
            }
            let mut m = [Moments::EMPTY; K];
            for (mi, col) in m.iter_mut().zip(&cols) {
                *mi = Moments::from_draws(col);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut total = [Moments::EMPTY; K];
    for m in per_chunk {
        for (t, mi) in total.iter_mut().zip(m) {
            *t = t.merge(mi);
        }
    }
    let mut out = [Estimate::ZERO; K];
    for (o, t) in out.iter_mut().zip(total) {
        *o = t.estimate(n);
    }
    Ok(out)
}

/// `base - Σ holes` with errors combined in quadrature.
fn difference(base: Estimate, holes: &[Estimate]) -> Estimate {
    let h = log2_sum(&holes.iter().map(|e| e.log2).collect::<Vec<_>>());
    if base.log2 == f64::NEG_INFINITY || h >= base.log2 {
        return Estimate::ZERO;
    }
    let mut e2 = base.rel_err * base.rel_err;
    for e in holes {
        let r = e.rel_err * (e.log2 - base.log2).exp2();
        e2 += r * r;
    }
    let frac = 1.0 - (h - base.log2).exp2();
    Estimate {
        log2: log2_sub(base.log2, h),
        rel_err: e2.sqrt() / frac,
    }
}

fn region_estimate<const K: usize, F>(
    region: &Region,
    index: usize,
    quad: &QuadratureSpec,
    axisymmetric: bool,
    f: &F,
) -> Result<[Estimate; K]>
where
    F: Fn(&RegionLabel, &Sample) -> Result<[f64; K]> + Sync,
{
    let simple = |shape: &Shape, sub: usize| -> Result<[Estimate; K]> {
        match quad.method {
            Method::TensorCylindrical => tensor_simple(shape, &region.label, quad, axisymmetric, f),
            Method::MonteCarlo => {
                let id = ((index as u32) << 12) | sub as u32;
                mc_simple(shape, &region.label, quad, id, f)
            }
        }
    };
    match &region.shape {
        Shape::Difference { base, holes } => {
            let b = simple(base, 0)?;
            let hs = holes
                .iter()
                .enumerate()
                .map(|(i, h)| simple(h, i + 1))
                .collect::<Result<Vec<_>>>()?;
            let mut out = [Estimate::ZERO; K];
            for i in 0..K {
                let hi: Vec<Estimate> = hs.iter().map(|h| h[i]).collect();
                out[i] = difference(b[i], &hi);
            }
            Ok(out)
        }
        shape => simple(shape, 0),
    }
}

/// Integrates the `K` integrands (returned as `log2` values) over every
/// region. Results are in region order and independent of the thread count.
pub fn integrate<const K: usize, F>(
    regions: &[Region],
    quad: &QuadratureSpec,
    axisymmetric: bool,
    f: &F,
) -> Result<Vec<[Estimate; K]>>
where
    F: Fn(&RegionLabel, &Sample) -> Result<[f64; K]> + Sync,
{
    quad.validate()?;
    regions
        .par_iter()
        .enumerate()
        .map(|(i, r)| region_estimate(r, i, quad, axisymmetric, f))
        .collect()
}
