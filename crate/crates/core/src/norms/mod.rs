//! Norm integration over labelled regions.
//!
//! Every region carries a parametrised [`Shape`](shapes::Shape). Integrals are
//! computed region by region in `log2` space, either with tensor-product Gauss
//! rules in cylindrical coordinates (geometrically graded towards the corner
//! circles of collar wedges) or with plain Monte Carlo on counter-based
//! random streams.

pub mod engine;
pub mod regions;
pub mod rules;
pub mod shapes;

use serde::{Deserialize, Serialize};

pub use engine::{integrate, Estimate};
pub use regions::Selection;
pub use shapes::Shape;

use crate::error::{Error, Result};
use crate::field::{RegionField, Sample};
use crate::geometry::RegionLabel;
use crate::logspace::log2_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TensorCylindrical,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub method: Method,
    /// Gauss nodes across a radius (per grading level in wedges).
    pub radial_nodes: usize,
    /// Gauss nodes along an axis (and in the wedge angle).
    pub axial_nodes: usize,
    /// Nodes per angle of the cross-section sphere when the field is not axisymmetric.
    pub angular_nodes: usize,
    /// Gauss nodes per coordinate on boxes.
    pub box_nodes: usize,
    /// Ratio between consecutive graded intervals towards a corner circle.
    pub grading_ratio: f64,
    pub grading_levels: usize,
    /// Monte Carlo draws per shape.
    pub samples: u64,
    pub seed: u64,
    /// Largest accepted change in a collar wedge when the grading depth is cut to 2/3.
    pub target_rel_error: f64,
    /// Run the coarse tensor rule as an error estimate.
    pub error_estimate: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: Method::TensorCylindrical,
            radial_nodes: 8,
            axial_nodes: 12,
            angular_nodes: 12,
            box_nodes: 10,
            grading_ratio: 0.15,
            grading_levels: 16,
            samples: 200_000,
            seed: 20_240_601,
            target_rel_error: 1e-3,
            error_estimate: true,
        }
    }
}

impl QuadratureSpec {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            method: Method::MonteCarlo,
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.radial_nodes, self.axial_nodes, self.angular_nodes, self.box_nodes];
        if counts.iter().any(|&c| c == 0 || c > 256) {
            return Err(Error::invalid("node counts must lie in 1..=256"));
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(Error::invalid("grading_ratio must lie in (0,1)"));
        }
        if self.grading_levels > 200 {
            return Err(Error::invalid("grading_levels must be at most 200"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("samples must be at least 2"));
        }
        if !(self.target_rel_error > 0.0) {
            return Err(Error::invalid("target_rel_error must be positive"));
        }
        Ok(())
    }

    pub fn tensor_rule(&self, axisymmetric: bool) -> shapes::TensorRule {
        shapes::TensorRule {
            radial: self.radial_nodes,
            axial: self.axial_nodes,
            angular: self.angular_nodes,
            box_nodes: self.box_nodes,
            grading_ratio: self.grading_ratio,
            grading_levels: self.grading_levels,
            axisymmetric,
        }
    }
}

/// A labelled integration region.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub label: RegionLabel,
    pub shape: Shape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrand {
    /// `|f|^p`
    Lp,
    /// `|∇f|^p`
    Grad,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contribution {
    pub region: String,
    pub value: f64,
    pub log2_value: f64,
    pub stderr: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub integrand: Integrand,
    pub exponent: f64,
    pub method: Method,
    pub contributions: Vec<Contribution>,
    /// `Σ` of the contributions, i.e. the `p`-th power of the norm.
    pub total: f64,
    pub log2_total: f64,
    pub stderr: f64,
    pub rel_err: f64,
    pub norm: f64,
    pub log2_norm: f64,
}

impl NormReport {
    fn build(integrand: Integrand, p: f64, method: Method, regions: &[Region], est: &[Estimate]) -> Self {
        let contributions: Vec<Contribution> = regions
            .iter()
            .zip(est)
            .map(|(r, e)| Contribution {
                region: r.label.to_string(),
                value: e.value(),
                log2_value: e.log2,
                stderr: e.stderr(),
                rel_err: e.rel_err,
            })
            .collect();
        let total = combine(est);
        NormReport {
            integrand,
            exponent: p,
            method,
            contributions,
            total: total.value(),
            log2_total: total.log2,
            stderr: total.stderr(),
            rel_err: total.rel_err,
            norm: (total.log2 / p).exp2(),
            log2_norm: total.log2 / p,
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            log2: self.log2_total,
            rel_err: self.rel_err,
        }
    }
}

/// Sum of independent estimates.
pub fn combine(est: &[Estimate]) -> Estimate {
    let log2 = log2_sum(&est.iter().map(|e| e.log2).collect::<Vec<_>>());
    if log2 == f64::NEG_INFINITY {
        return Estimate::ZERO;
    }
    let e2: f64 = est
        .iter()
        .map(|e| {
            let r = e.rel_err * (e.log2 - log2).exp2();
            if r.is_nan() {
                0.0
            } else {
                r * r
            }
        })
        .sum();
    Estimate {
        log2,
        rel_err: e2.sqrt(),
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("exponent must be a finite p >= 1, got {p}")));
    }
    Ok(())
}

fn check_dim(f: &dyn RegionField, regions: &[Region]) -> Result<()> {
    if regions.is_empty() {
        return Err(Error::Degenerate("no regions to integrate over".into()));
    }
    if let Some(r) = regions.iter().find(|r| r.shape.dim() != f.dim()) {
        return Err(Error::invalid(format!(
            "region {} has dimension {}, field has {}",
            r.label,
            r.shape.dim(),
            f.dim()
        )));
    }
    Ok(())
}

/// `∫ |f|^p` and `∫ |∇f|^p` in one pass.
pub fn lp_and_seminorm(
    f: &dyn RegionField,
    regions: &[Region],
    p: f64,
    quad: &QuadratureSpec,
) -> Result<(NormReport, NormReport)> {
    check_exponent(p)?;
    check_dim(f, regions)?;
    let est = integrate(regions, quad, f.axisymmetric(), &|l: &RegionLabel, s: &Sample| {
        Ok([p * f.log2_abs_at(l, s)?, p * f.log2_grad_at(l, s)?])
    })?;
    let a: Vec<Estimate> = est.iter().map(|e| e[0]).collect();
    let b: Vec<Estimate> = est.iter().map(|e| e[1]).collect();
    Ok((
        NormReport::build(Integrand::Lp, p, quad.method, regions, &a),
        NormReport::build(Integrand::Grad, p, quad.method, regions, &b),
    ))
}

fn single(
    kind: Integrand,
    f: &dyn RegionField,
    regions: &[Region],
    p: f64,
    quad: &QuadratureSpec,
) -> Result<NormReport> {
    check_exponent(p)?;
    check_dim(f, regions)?;
    let est = integrate(regions, quad, f.axisymmetric(), &|l: &RegionLabel, s: &Sample| {
        Ok([p * match kind {
            Integrand::Lp => f.log2_abs_at(l, s)?,
            Integrand::Grad => f.log2_grad_at(l, s)?,
        }])
    })?;
    let e: Vec<Estimate> = est.iter().map(|e| e[0]).collect();
    Ok(NormReport::build(kind, p, quad.method, regions, &e))
}

/// `(∫ |f|^p)^{1/p}` region by region.
pub fn lp_norm(f: &dyn RegionField, regions: &[Region], p: f64, quad: &QuadratureSpec) -> Result<NormReport> {
    single(Integrand::Lp, f, regions, p, quad)
}

/// `(∫ |∇f|^p)^{1/p}` region by region.
pub fn sobolev_seminorm(f: &dyn RegionField, regions: &[Region], p: f64, quad: &QuadratureSpec) -> Result<NormReport> {
    single(Integrand::Grad, f, regions, p, quad)
}

/// Full `W^{1,p}` norm `(∫|f|^p + ∫|∇f|^p)^{1/p}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolevReport {
    pub lp: NormReport,
    pub grad: NormReport,
    pub log2_total: f64,
    pub rel_err: f64,
    pub log2_norm: f64,
    pub norm: f64,
}

pub fn sobolev_norm(f: &dyn RegionField, regions: &[Region], p: f64, quad: &QuadratureSpec) -> Result<SobolevReport> {
    let (lp, grad) = lp_and_seminorm(f, regions, p, quad)?;
    let t = combine(&[lp.estimate(), grad.estimate()]);
    Ok(SobolevReport {
        lp,
        grad,
        log2_total: t.log2,
        rel_err: t.rel_err,
        log2_norm: t.log2 / p,
        norm: (t.log2 / p).exp2(),
    })
}

/// `∫_{x_n = t} |∇f|^q` over a slice given as plane regions.
pub fn plane_seminorm(f: &dyn RegionField, slice: &[Region], q: f64, quad: &QuadratureSpec) -> Result<NormReport> {
    if slice.is_empty() {
        return Err(Error::Degenerate("slice intersects no support".into()));
    }
    if let Some(r) = slice.iter().find(|r| {
        !matches!(
            r.shape,
            Shape::PlaneBox { .. } | Shape::PlaneShell { .. } | Shape::Difference { .. }
        )
    }) {
        return Err(Error::invalid(format!("region {} is not a plane slice", r.label)));
    }
    sobolev_seminorm(f, slice, q, quad)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareReport {
    pub exponent: f64,
    pub volume: f64,
    pub mean: f64,
    /// `∫ |f - mean|^p`
    pub deviation: f64,
    /// `∫ |∇f|^p`
    pub gradient: f64,
    pub quotient: f64,
    pub log2_quotient: f64,
    pub rel_err: f64,
    pub diameter: f64,
    pub diameter_p: f64,
}

/// `∫|f - f_Ω|^p / ∫|∇f|^p` over the union of `regions`, which must be disjoint.
pub fn poincare_quotient(
    f: &dyn RegionField,
    regions: &[Region],
    diameter: f64,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<PoincareReport> {
    check_exponent(p)?;
    check_dim(f, regions)?;
    let sym = f.axisymmetric();
    let first = integrate(regions, quad, sym, &|l: &RegionLabel, s: &Sample| {
        let v = f.value_at(l, s)?;
        Ok([v.max(0.0).log2(), (-v).max(0.0).log2(), 0.0])
    })?;
    let col = |i: usize| combine(&first.iter().map(|e| e[i]).collect::<Vec<_>>());
    let (pos, neg, vol) = (col(0), col(1), col(2));
    let mean = (pos.value() - neg.value()) / vol.value();
    let second = integrate(regions, quad, sym, &|l: &RegionLabel, s: &Sample| {
        let v = f.value_at(l, s)?;
        Ok([p * (v - mean).abs().log2(), p * f.log2_grad_at(l, s)?])
    })?;
    let dev = combine(&second.iter().map(|e| e[0]).collect::<Vec<_>>());
    let grad = combine(&second.iter().map(|e| e[1]).collect::<Vec<_>>());
    if grad.log2 == f64::NEG_INFINITY {
        return Err(Error::Degenerate("gradient integral is zero".into()));
    }
    let lq = dev.log2 - grad.log2;
    Ok(PoincareReport {
        exponent: p,
        volume: vol.value(),
        mean,
        deviation: dev.value(),
        gradient: grad.value(),
        quotient: lq.exp2(),
        log2_quotient: lq,
        rel_err: (dev.rel_err.powi(2) + grad.rel_err.powi(2)).sqrt(),
        diameter,
        diameter_p: diameter.powf(p),
    })
}

/// Closed form of `Σ_{k ≥ k0} 2^{-αk}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTail {
    pub alpha: f64,
    pub k0: i64,
    pub convergent: bool,
    pub sum: f64,
    pub log2_sum: f64,
}

pub fn series_tail(alpha: f64, k0: i64) -> SeriesTail {
    if !(alpha > 0.0) {
        return SeriesTail {
            alpha,
            k0,
            convergent: false,
            sum: f64::INFINITY,
            log2_sum: f64::INFINITY,
        };
    }
    let log2_sum = -alpha * k0 as f64 - (-(-alpha).exp2()).ln_1p() / std::f64::consts::LN_2;
    SeriesTail {
        alpha,
        k0,
        convergent: true,
        sum: log2_sum.exp2(),
        log2_sum,
    }
}

/// `log2 Σ_{k=k0}^{k1} 2^{-αk}` by direct summation.
pub fn geometric_partial_sum(alpha: f64, k0: i64, k1: i64) -> f64 {
    let terms: Vec<f64> = (k0..=k1).map(|k| -alpha * k as f64).collect();
    log2_sum(&terms)
}

#[cfg(test)]
mod tests;
