//! The scalar-field abstraction shared by builtin fields, the extension
//! operator and the norm engine.

use crate::error::Result;
use crate::geometry::RegionLabel;

/// An evaluable function on `R^n` with an optional analytic gradient.
///
/// The `*_hinted` methods receive the label of the region the point was drawn
/// from. Piecewise fields use it to pick their branch directly, which is the
/// only reliable option inside cylinders narrower than the spacing of `f64`
/// values near their axis.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        central_difference(&|y: &[f64]| self.value(y), x, self.fd_step(x))
    }

    fn has_analytic_gradient(&self) -> bool {
        false
    }

    /// Step for central differences at `x`.
    fn fd_step(&self, _x: &[f64]) -> f64 {
        1e-6
    }

    /// Whether the field is invariant under rotations about the axis of every
    /// cylindrical region it is integrated over.
    fn axisymmetric(&self) -> bool {
        false
    }

    fn name(&self) -> String {
        "field".to_string()
    }

    fn value_hinted(&self, x: &[f64], _hint: &RegionLabel) -> f64 {
        self.value(x)
    }

    fn gradient_hinted(&self, x: &[f64], _hint: &RegionLabel) -> Vec<f64> {
        self.gradient(x)
    }

    fn log2_abs_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        self.value_hinted(x, hint).abs().log2()
    }

    fn log2_grad_norm_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        norm(&self.gradient_hinted(x, hint)).log2()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Central-difference gradient with a step scaled by `max(1, |x_i|)`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let hi = h * x[i].abs().max(1.0);
            y[i] = x[i] + hi;
            let fp = f(&y);
            y[i] = x[i] - hi;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * hi)
        })
        .collect()
}

/// Local cylindrical coordinates carried by integration samples.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalCoords {
    /// Radius of the frame's cylinder (the collar's inner radius).
    pub rho: f64,
    /// `s - rho`, exact even when `rho` is far below the resolution of `x`.
    pub offset: f64,
    /// Unit radial direction in the cross-section.
    pub dir: Vec<f64>,
    /// Axial coordinate mapped to `[0,1]`.
    pub xn: f64,
    /// `1 - xn`, exact near the upper end.
    pub top: f64,
}

impl LocalCoords {
    pub fn s(&self) -> f64 {
        self.rho + self.offset
    }
}

/// A point together with optional exact local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub local: Option<LocalCoords>,
}

impl Sample {
    pub fn plain(x: Vec<f64>) -> Self {
        Self { x, local: None }
    }
}

/// A field that can be integrated region by region. Results are `log2` values.
pub trait RegionField: Sync {
    fn dim(&self) -> usize;
    fn axisymmetric(&self) -> bool;
    fn value_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64>;
    fn log2_abs_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64>;
    fn log2_grad_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64>;
}

/// Adapts a [`ScalarField`] to [`RegionField`] by ignoring local coordinates.
pub struct Plain<'a>(pub &'a dyn ScalarField);

impl RegionField for Plain<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn axisymmetric(&self) -> bool {
        self.0.axisymmetric()
    }

    fn value_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
        Ok(self.0.value_hinted(&s.x, label))
    }

    fn log2_abs_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
        Ok(self.0.log2_abs_hinted(&s.x, label))
    }

    fn log2_grad_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
        Ok(self.0.log2_grad_norm_hinted(&s.x, label))
    }
}

/// `constant + Σ c_i f_i`.
pub struct Combination<'a> {
    pub dim: usize,
    pub constant: f64,
    pub terms: Vec<(f64, &'a dyn ScalarField)>,
}

impl ScalarField for Combination<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(c, f)| c * f.value(x)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (c, f) in &self.terms {
            for (gi, v) in g.iter_mut().zip(f.gradient(x)) {
                *gi += c * v;
            }
        }
        g
    }

    fn has_analytic_gradient(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.has_analytic_gradient())
    }

    fn axisymmetric(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.axisymmetric())
    }

    fn value_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        self.constant + self.terms.iter().map(|(c, f)| c * f.value_hinted(x, hint)).sum::<f64>()
    }

    fn gradient_hinted(&self, x: &[f64], hint: &RegionLabel) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (c, f) in &self.terms {
            for (gi, v) in g.iter_mut().zip(f.gradient_hinted(x, hint)) {
                *gi += c * v;
            }
        }
        g
    }
}

/// A field given by closures.
pub struct FnField<F, G = fn(&[f64]) -> Vec<f64>> {
    pub dim: usize,
    pub f: F,
    pub grad: Option<G>,
    pub label: String,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, label: &str, f: F) -> Self {
        Self {
            dim,
            f,
            grad: None,
            label: label.to_string(),
        }
    }
}

impl<F, G> FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn with_gradient(dim: usize, label: &str, f: F, grad: G) -> Self {
        Self {
            dim,
            f,
            grad: Some(grad),
            label: label.to_string(),
        }
    }
}

impl<F, G> ScalarField for FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => central_difference(&|y: &[f64]| (self.f)(y), x, self.fd_step(x)),
        }
    }

    fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_difference_fallback() {
        let f = FnField::new(2, "xy", |x: &[f64]| x[0] * x[0] * x[1]);
        let g = f.gradient(&[1.5, 2.0]);
        assert!((g[0] - 6.0).abs() < 1e-8);
        assert!((g[1] - 2.25).abs() < 1e-8);
        assert!(!f.has_analytic_gradient());
    }

    #[test]
    fn combination_is_linear() {
        let a = FnField::with_gradient(2, "a", |x: &[f64]| x[0], |_x: &[f64]| vec![1.0, 0.0]);
        let b = FnField::with_gradient(2, "b", |x: &[f64]| x[1] * x[1], |x: &[f64]| vec![0.0, 2.0 * x[1]]);
        let c = Combination {
            dim: 2,
            constant: 1.0,
            terms: vec![(2.0, &a), (-3.0, &b)],
        };
        assert_eq!(c.value(&[1.0, 2.0]), 1.0 + 2.0 - 12.0);
        assert_eq!(c.gradient(&[1.0, 2.0]), vec![2.0, -12.0]);
        assert!(c.has_analytic_gradient());
    }
}
