//! One-dimensional and spherical quadrature rules.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / 2.0;
    x.iter().zip(&w).map(|(xi, wi)| (a + h * (xi + 1.0), wi * h)).collect()
}

/// Directions on the unit sphere of `R^dim` with weights summing to its area.
///
/// `dim = 1` gives the two points `±1` with unit weights. The circle uses the
/// midpoint trapezoid rule with `m` points; higher spheres recurse through a
/// polar angle, integrated in `u = cos θ` by Gauss-Legendre for odd `dim` and
/// by the Chebyshev rule of the second kind for even `dim`.
pub fn sphere_rule(dim: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    match dim {
        0 => vec![],
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..m)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / m as f64)
            })
            .collect(),
        _ => {
            let lower = sphere_rule(dim - 1, m);
            let k = m.div_ceil(2).max(2);
            // polar angle through u = cos θ with weight (1 - u^2)^{(dim-3)/2}
            let polar: Vec<(f64, f64)> = if dim % 2 == 1 {
                let e = (dim as i32 - 3) / 2;
                gauss_interval(k, -1.0, 1.0)
                    .into_iter()
                    .map(|(u, w)| (u.acos(), w * (1.0 - u * u).powi(e)))
                    .collect()
            } else {
                // Chebyshev rule of the second kind absorbs the square root
                let e = (dim as i32 - 4) / 2;
                (1..=k)
                    .map(|i| {
                        let t = i as f64 * PI / (k + 1) as f64;
                        let u = t.cos();
                        (t, PI / (k + 1) as f64 * t.sin().powi(2) * (1.0 - u * u).powi(e))
                    })
                    .collect()
            };
            let mut out = Vec::with_capacity(polar.len() * lower.len());
            for &(theta, wt) in &polar {
                let (c, s) = (theta.cos(), theta.sin());
                for (y, wy) in &lower {
                    let mut v = Vec::with_capacity(dim);
                    v.push(c);
                    v.extend(y.iter().map(|a| s * a));
                    out.push((v, wt * wy));
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere_area;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_areas_and_moments() {
        for dim in 1..6 {
            let rule = sphere_rule(dim, 8);
            let total: f64 = rule.iter().map(|r| r.1).sum();
            assert!((total - sphere_area(dim)).abs() < 1e-12 * sphere_area(dim), "dim {dim}");
            for (v, _) in &rule {
                let n: f64 = v.iter().map(|a| a * a).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
            if dim >= 2 {
                // ∫ x_1^2 = area / dim
                let m2: f64 = rule.iter().map(|(v, w)| w * v[0] * v[0]).sum();
                assert!((m2 - sphere_area(dim) / dim as f64).abs() < 1e-10, "dim {dim}");
            }
        }
    }
}
