//! The extension operator on the ambient cylinder `base × (0,3)`.
//!
//! Branches by region:
//! - domain pieces: `u`
//! - slab: `L1 · u∘R1`
//! - head collar `k`: `L^i · u∘R_head`
//! - stem collar `k`: `L1 · L^o · u∘R1 + L^i · u∘R_stem`
//! - everything else: `0`

use std::fmt;
use std::str::FromStr;

use crate::cutoffs::{self, CollarCoords};
use crate::error::{Error, Result};
use crate::field::{Combination, LocalCoords, RegionField, Sample, ScalarField};
use crate::geometry::{MushroomSpec, RegionLabel, RegionTag};
use crate::maps::{collar_image_radius, collar_pullback, collar_ratio, reflect_slab};
use crate::rng;

pub struct Extension<'a> {
    spec: &'a MushroomSpec,
    u: &'a dyn ScalarField,
}

const CUBE: RegionLabel = RegionLabel::Mushroom(RegionTag::Cube);

fn axial_unit(n: usize, v: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[n - 1] = v;
    e
}

impl<'a> Extension<'a> {
    pub fn new(spec: &'a MushroomSpec, u: &'a dyn ScalarField) -> Result<Self> {
        if u.dim() != spec.n {
            return Err(Error::invalid(format!(
                "field has dimension {}, domain has {}",
                u.dim(),
                spec.n
            )));
        }
        Ok(Self { spec, u })
    }

    pub fn spec(&self) -> &MushroomSpec {
        self.spec
    }

    fn in_ambient(&self, x: &[f64]) -> bool {
        let n = self.spec.n;
        x.len() == n && x[n - 1] > 0.0 && x[n - 1] < 3.0 && x[..n - 1].iter().all(|&v| v > 0.0 && v < 1.0)
    }

    /// Local collar coordinates of a Cartesian point.
    pub fn collar_local(&self, tag: RegionTag, x: &[f64]) -> Option<LocalCoords> {
        let (k, rho, base) = match tag {
            RegionTag::StemCollar(k, _) => (k, self.spec.stem_radius(k), 1.0),
            RegionTag::HeadCollar(k, _) => (k, self.spec.head_radius(k), 2.0),
            _ => return None,
        };
        let s = self.spec.radial(k, x);
        let dir = self.spec.radial_direction(k, x)?;
        Some(LocalCoords {
            rho,
            offset: s - rho,
            dir,
            xn: x[self.spec.n - 1] - base,
            top: base + 1.0 - x[self.spec.n - 1],
        })
    }

    fn sample_for(&self, tag: RegionTag, x: &[f64]) -> Sample {
        Sample {
            x: x.to_vec(),
            local: self.collar_local(tag, x),
        }
    }

    /// `E(u)(x)`. Fails outside the ambient cylinder.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        if !self.in_ambient(x) {
            return Err(Error::outside("ambient cylinder", format!("{x:?}")));
        }
        let tag = self.spec.classify(x);
        self.branch_value(tag, &self.sample_for(tag, x))
    }

    /// `∇E(u)(x)`. Fails on collar walls, the planes `x_n ∈ {1,2}` outside the
    /// domain, and the corner circles.
    pub fn gradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.in_ambient(x) {
            return Err(Error::outside("ambient cylinder", format!("{x:?}")));
        }
        let tag = self.spec.classify(x);
        let xn = x[self.spec.n - 1];
        if !tag.in_domain() && (xn == 1.0 || xn == 2.0) {
            return Err(Error::OnInterface(format!("x_n = {xn} at {tag}")));
        }
        let sample = self.sample_for(tag, x);
        if let Some(l) = &sample.local {
            if l.offset == 0.0 || l.offset == l.rho {
                return Err(Error::OnInterface(format!("collar wall of {tag}")));
            }
        }
        self.branch_gradient(tag, &sample)
    }

    fn local<'s>(&self, tag: RegionTag, s: &'s Sample) -> Result<std::borrow::Cow<'s, LocalCoords>> {
        match &s.local {
            Some(l) => Ok(std::borrow::Cow::Borrowed(l)),
            None => self
                .collar_local(tag, &s.x)
                .map(std::borrow::Cow::Owned)
                .ok_or_else(|| Error::OnInterface(format!("axis of {tag}"))),
        }
    }

    fn image(&self, k: usize, l: &LocalCoords, xn: f64) -> Vec<f64> {
        let z = self.spec.center(k);
        let s_img = collar_image_radius(l.offset, l.rho);
        let mut y: Vec<f64> = z.iter().zip(&l.dir).map(|(c, d)| c + s_img * d).collect();
        y.push(xn);
        y
    }

    /// `u(y) - u(R1 x)` for a stem-collar point. The two points are `O(ρ)`
    /// apart, so below `THIN` the difference is split at the foot `P` of `y`
    /// on the cube top and each piece is taken as a gradient times a
    /// displacement assembled from exact local coordinates.
    fn image_gap(&self, k: usize, l: &LocalCoords, r1: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
        const THIN: f64 = 1.0 / 16384.0;
        if l.rho > THIN {
            return b - a;
        }
        let n = self.spec.n;
        // y - P inside the stem, purely axial
        let mut m = y.to_vec();
        m[n - 1] = 1.0 + 0.5 * l.xn;
        let gs = self.u.gradient_hinted(&m, &RegionLabel::Mushroom(RegionTag::Stem(k)));
        let upper = gs[n - 1] * l.xn;
        // P - R1 x inside the cube
        let mut p = y.to_vec();
        p[n - 1] = 1.0;
        let mid: Vec<f64> = p.iter().zip(r1).map(|(a, b)| 0.5 * (a + b)).collect();
        let gc = self.u.gradient_hinted(&mid, &CUBE);
        let radial = -1.5 * l.offset;
        let lower: f64 = l.dir.iter().zip(&gc).map(|(u, g)| radial * u * g).sum::<f64>() + gc[n - 1] * l.xn;
        upper + lower
    }

    fn coords(l: &LocalCoords) -> Result<CollarCoords> {
        CollarCoords::with_top(l.offset, l.xn, l.top, 2.0 * l.rho)
    }

    /// Value of the branch belonging to `tag` at a sample.
    pub fn branch_value(&self, tag: RegionTag, s: &Sample) -> Result<f64> {
        let n = self.spec.n;
        let xn = s.x[n - 1];
        match tag {
            RegionTag::Cube | RegionTag::Stem(_) | RegionTag::Head(_) => {
                Ok(self.u.value_hinted(&s.x, &RegionLabel::Mushroom(tag)))
            }
            RegionTag::Slab => {
                let l1 = cutoffs::eval_l1(xn)?;
                Ok(l1 * self.u.value_hinted(&reflect_slab(&s.x), &CUBE))
            }
            RegionTag::HeadCollar(k, _) => {
                let l = self.local(tag, s)?;
                let c = Self::coords(&l)?;
                let li = cutoffs::eval_li(&c);
                let y = self.image(k, &l, xn);
                Ok(li * self.u.value_hinted(&y, &RegionLabel::Mushroom(RegionTag::Head(k))))
            }
            RegionTag::StemCollar(k, _) => {
                let l = self.local(tag, s)?;
                let c = Self::coords(&l)?;
                let l1 = l.top;
                let lo = cutoffs::eval_lo(&c);
                let li = cutoffs::eval_li(&c);
                let a = self.u.value_hinted(&reflect_slab(&s.x), &CUBE);
                let y = self.image(k, &l, xn);
                let b = self.u.value_hinted(&y, &RegionLabel::Mushroom(RegionTag::Stem(k)));
                Ok(l1 * lo * a + li * b)
            }
            RegionTag::Outside => Ok(0.0),
        }
    }

    /// Gradient of the branch belonging to `tag` at a sample.
    pub fn branch_gradient(&self, tag: RegionTag, s: &Sample) -> Result<Vec<f64>> {
        let n = self.spec.n;
        let xn = s.x[n - 1];
        match tag {
            RegionTag::Cube | RegionTag::Stem(_) | RegionTag::Head(_) => {
                Ok(self.u.gradient_hinted(&s.x, &RegionLabel::Mushroom(tag)))
            }
            RegionTag::Slab => {
                let l1 = cutoffs::eval_l1(xn)?;
                let y = reflect_slab(&s.x);
                let v = self.u.value_hinted(&y, &CUBE);
                let mut g = self.u.gradient_hinted(&y, &CUBE);
                g[n - 1] = -g[n - 1];
                for gi in g.iter_mut() {
                    *gi *= l1;
                }
                g[n - 1] -= v;
                Ok(g)
            }
            RegionTag::HeadCollar(k, _) => {
                let l = self.local(tag, s)?;
                let c = Self::coords(&l)?;
                let li = cutoffs::eval_li(&c);
                let dli = cutoffs::grad_li(&c)?.cartesian(&l.dir);
                let y = self.image(k, &l, xn);
                let hint = RegionLabel::Mushroom(RegionTag::Head(k));
                let v = self.u.value_hinted(&y, &hint);
                let gu = self.u.gradient_hinted(&y, &hint);
                let pulled = collar_pullback(&l.dir, collar_ratio(l.offset / l.rho), &gu);
                Ok((0..n).map(|i| dli[i] * v + li * pulled[i]).collect())
            }
            RegionTag::StemCollar(k, _) => {
                let l = self.local(tag, s)?;
                let c = Self::coords(&l)?;
                let l1 = l.top;
                let dl1 = axial_unit(n, -1.0);
                let lo = cutoffs::eval_lo(&c);
                let li = cutoffs::eval_li(&c);
                let dli = cutoffs::grad_li(&c)?.cartesian(&l.dir);
                let r1 = reflect_slab(&s.x);
                let a = self.u.value_hinted(&r1, &CUBE);
                let mut ga = self.u.gradient_hinted(&r1, &CUBE);
                ga[n - 1] = -ga[n - 1];
                let y = self.image(k, &l, xn);
                let hint = RegionLabel::Mushroom(RegionTag::Stem(k));
                let b = self.u.value_hinted(&y, &hint);
                let gb = self.u.gradient_hinted(&y, &hint);
                let pulled = collar_pullback(&l.dir, collar_ratio(l.offset / l.rho), &gb);
                // ∇Lo = -∇Li, so the cut-off gradients act on b - l1·a = (b - a) + xn·a.
                let gap = self.image_gap(k, &l, &r1, &y, a, b) + l.xn * a;
                Ok((0..n)
                    .map(|i| dli[i] * gap + dl1[i] * lo * a + l1 * lo * ga[i] + li * pulled[i])
                    .collect())
            }
            RegionTag::Outside => Ok(vec![0.0; n]),
        }
    }
}

impl ScalarField for Extension<'_> {
    fn dim(&self) -> usize {
        self.spec.n
    }

    /// NaN outside the ambient cylinder.
    fn value(&self, x: &[f64]) -> f64 {
        self.value_at(x).unwrap_or(f64::NAN)
    }

    /// NaN on interfaces and outside the ambient cylinder.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_at(x).unwrap_or_else(|_| vec![f64::NAN; self.spec.n])
    }

    fn has_analytic_gradient(&self) -> bool {
        self.u.has_analytic_gradient()
    }

    fn axisymmetric(&self) -> bool {
        self.u.axisymmetric()
    }

    fn name(&self) -> String {
        format!("E({})", self.u.name())
    }
}

fn mushroom_tag(label: &RegionLabel) -> Result<RegionTag> {
    match label {
        RegionLabel::Mushroom(t) => Ok(*t),
        other => Err(Error::UnsupportedRegion(other.to_string())),
    }
}

impl RegionField for Extension<'_> {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn axisymmetric(&self) -> bool {
        self.u.axisymmetric()
    }

    fn value_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
        self.branch_value(mushroom_tag(label)?, s)
    }

    fn log2_abs_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
        let tag = mushroom_tag(label)?;
        if tag.in_domain() {
            return Ok(self.u.log2_abs_hinted(&s.x, label));
        }
        Ok(self.branch_value(tag, s)?.abs().log2())
    }

    fn log2_grad_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
        let tag = mushroom_tag(label)?;
        if tag.in_domain() {
            return Ok(self.u.log2_grad_norm_hinted(&s.x, label));
        }
        Ok(crate::field::norm(&self.branch_gradient(tag, s)?).log2())
    }
}

/// `T(u) = E(u - mean) + mean`.
pub struct Homogenized<'a> {
    spec: &'a MushroomSpec,
    shifted: Combination<'a>,
    mean: f64,
}

pub fn homogenize<'a>(spec: &'a MushroomSpec, u: &'a dyn ScalarField, mean: f64) -> Homogenized<'a> {
    Homogenized {
        spec,
        shifted: Combination {
            dim: u.dim(),
            constant: -mean,
            terms: vec![(1.0, u)],
        },
        mean,
    }
}

impl Homogenized<'_> {
    fn ext(&self) -> Extension<'_> {
        Extension {
            spec: self.spec,
            u: &self.shifted,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

impl ScalarField for Homogenized<'_> {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.ext().value(x) + self.mean
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.ext().gradient(x)
    }

    fn has_analytic_gradient(&self) -> bool {
        self.shifted.has_analytic_gradient()
    }

    fn name(&self) -> String {
        format!("T({})", self.shifted.terms[0].1.name())
    }
}

/// Named interfaces of the extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    /// `s = r_k`, stem against its collar.
    StemLateral(usize),
    /// `s = 2 r_k`, stem collar against the slab.
    StemCollarOuter(usize),
    /// `x_n = 1` on the annulus `r_k < s < 2 r_k`, cube against stem collar.
    CubeTop(usize),
    /// `x_n = 2` on `r_k < s < tilde_r_k`, head against what lies below it.
    HeadBottom(usize),
    /// `s = tilde_r_k`, head against its collar.
    HeadLateral(usize),
    /// `s = 2 tilde_r_k`, head collar against whatever lies outside it.
    HeadCollarOuter(usize),
}

impl Face {
    pub fn index(&self) -> usize {
        match *self {
            Face::StemLateral(k)
            | Face::StemCollarOuter(k)
            | Face::CubeTop(k)
            | Face::HeadBottom(k)
            | Face::HeadLateral(k)
            | Face::HeadCollarOuter(k) => k,
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, k) = match *self {
            Face::StemLateral(k) => ("stem_lateral", k),
            Face::StemCollarOuter(k) => ("stem_collar_outer", k),
            Face::CubeTop(k) => ("cube_top", k),
            Face::HeadBottom(k) => ("head_bottom", k),
            Face::HeadLateral(k) => ("head_lateral", k),
            Face::HeadCollarOuter(k) => ("head_collar_outer", k),
        };
        write!(f, "{name}:{k}")
    }
}

impl FromStr for Face {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown face '{s}'"));
        let (name, k) = s.split_once(':').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        match name {
            "stem_lateral" => Ok(Face::StemLateral(k)),
            "stem_collar_outer" => Ok(Face::StemCollarOuter(k)),
            "cube_top" => Ok(Face::CubeTop(k)),
            "head_bottom" => Ok(Face::HeadBottom(k)),
            "head_lateral" => Ok(Face::HeadLateral(k)),
            "head_collar_outer" => Ok(Face::HeadCollarOuter(k)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct JumpReport {
    pub face: String,
    pub q: f64,
    pub epsilons: Vec<f64>,
    /// Extrapolated jump (outer minus inner) at each face point.
    pub jumps: Vec<f64>,
    pub sup: f64,
    /// `(mean |jump|^q)^{1/q}` over the face points.
    pub mean_q: f64,
}

/// Relative offsets used for the one-sided limits.
pub const JUMP_EPSILONS: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

/// One-sided evaluations at relative offset `eps` (inner, outer).
type SideEval<'f> = Box<dyn Fn(f64) -> Result<(f64, f64)> + 'f>;

/// Extrapolated jumps of `E(u)` across a face.
pub fn trace_jump(spec: &MushroomSpec, u: &dyn ScalarField, face: Face, q: f64) -> Result<JumpReport> {
    let k = face.index();
    if k == 0 || k > spec.m {
        return Err(Error::invalid(format!("face {face} needs 1 <= k <= m = {}", spec.m)));
    }
    let ext = Extension::new(spec, u)?;
    let n = spec.n;
    let z = spec.center(k).to_vec();
    let r = spec.stem_radius(k);
    let tr = spec.head_radius(k);
    let mut dir_rng = rng::stream(0x5eed_face, k as u32, 0);
    let dirs: Vec<Vec<f64>> = (0..8).map(|_| rng::unit_direction(&mut dir_rng, n - 1)).collect();
    let axial = [0.1, 0.3, 0.5, 0.7, 0.9];
    let radial = [0.2, 0.5, 0.8];

    let point = |s: f64, dir: &[f64], xn: f64| -> Vec<f64> {
        let mut x: Vec<f64> = z.iter().zip(dir).map(|(c, d)| c + s * d).collect();
        x.push(xn);
        x
    };
    let collar_sample = |rho: f64, offset: f64, dir: &[f64], base: f64, xn_loc: f64| -> Sample {
        Sample {
            x: point(rho + offset, dir, base + xn_loc),
            local: Some(LocalCoords {
                rho,
                offset,
                dir: dir.to_vec(),
                xn: xn_loc,
                top: 1.0 - xn_loc,
            }),
        }
    };
    let ext = &ext;
    let stem_collar = RegionTag::StemCollar(k, crate::geometry::CollarPart::Side);
    let head_collar = RegionTag::HeadCollar(k, crate::geometry::CollarPart::Side);

    let mut evals: Vec<SideEval<'_>> = Vec::new();
    for dir in &dirs {
        let dir = dir.clone();
        match face {
            Face::StemLateral(_) => {
                for &a in &axial {
                    let dir = dir.clone();
                    evals.push(Box::new(move |e| {
                        let inner =
                            ext.branch_value(RegionTag::Stem(k), &Sample::plain(point(r * (1.0 - e), &dir, 1.0 + a)))?;
                        let outer = ext.branch_value(stem_collar, &collar_sample(r, e * r, &dir, 1.0, a))?;
                        Ok((inner, outer))
                    }));
                }
            }
            Face::StemCollarOuter(_) => {
                for &a in &axial {
                    let dir = dir.clone();
                    evals.push(Box::new(move |e| {
                        let inner = ext.branch_value(stem_collar, &collar_sample(r, r * (1.0 - e), &dir, 1.0, a))?;
                        let outer = ext.branch_value(
                            RegionTag::Slab,
                            &Sample::plain(point(2.0 * r * (1.0 + e), &dir, 1.0 + a)),
                        )?;
                        Ok((inner, outer))
                    }));
                }
            }
            Face::CubeTop(_) => {
                for &f in &radial {
                    let dir = dir.clone();
                    evals.push(Box::new(move |e| {
                        let inner =
                            ext.branch_value(RegionTag::Cube, &Sample::plain(point(r * (1.0 + f), &dir, 1.0 - e * r)))?;
                        let outer = ext.branch_value(stem_collar, &collar_sample(r, f * r, &dir, 1.0, e * r))?;
                        Ok((inner, outer))
                    }));
                }
            }
            Face::HeadBottom(_) => {
                for &f in &[0.3, 0.6, 0.9] {
                    let dir = dir.clone();
                    let s = f * tr;
                    evals.push(Box::new(move |e| {
                        let inner =
                            ext.branch_value(RegionTag::Head(k), &Sample::plain(point(s, &dir, 2.0 + e * tr)))?;
                        let outer = if s <= 2.0 * r {
                            ext.branch_value(stem_collar, &collar_sample(r, s - r, &dir, 1.0, 1.0 - e * tr))?
                        } else {
                            ext.branch_value(RegionTag::Slab, &Sample::plain(point(s, &dir, 2.0 - e * tr)))?
                        };
                        Ok((inner, outer))
                    }));
                }
            }
            Face::HeadLateral(_) => {
                for &a in &axial {
                    let dir = dir.clone();
                    evals.push(Box::new(move |e| {
                        let inner =
                            ext.branch_value(RegionTag::Head(k), &Sample::plain(point(tr * (1.0 - e), &dir, 2.0 + a)))?;
                        let outer = ext.branch_value(head_collar, &collar_sample(tr, e * tr, &dir, 2.0, a))?;
                        Ok((inner, outer))
                    }));
                }
            }
            Face::HeadCollarOuter(_) => {
                for &a in &axial {
                    let probe = point(2.0 * tr, &dir, 2.0 + a);
                    if !ext.in_ambient(&probe) {
                        continue;
                    }
                    let dir = dir.clone();
                    evals.push(Box::new(move |e| {
                        let inner = ext.branch_value(head_collar, &collar_sample(tr, tr * (1.0 - e), &dir, 2.0, a))?;
                        let outer = ext.value_at(&point(2.0 * tr * (1.0 + e), &dir, 2.0 + a))?;
                        Ok((inner, outer))
                    }));
                }
            }
        }
    }
    if evals.is_empty() {
        return Err(Error::Degenerate(format!(
            "face {face} has no points inside the ambient cylinder"
        )));
    }

    let mut jumps = Vec::with_capacity(evals.len());
    for ev in &evals {
        let mut pts = Vec::with_capacity(JUMP_EPSILONS.len());
        for &e in &JUMP_EPSILONS {
            let (a, b) = ev(e)?;
            pts.push((e, b - a));
        }
        jumps.push(extrapolate_to_zero(&pts));
    }
    if jumps.iter().any(|j| !j.is_finite()) {
        return Err(Error::Numerical(format!("non-finite jump on {face}")));
    }
    let sup = jumps.iter().fold(0.0f64, |m, j| m.max(j.abs()));
    let mean_q = (jumps.iter().map(|j| j.abs().powf(q)).sum::<f64>() / jumps.len() as f64).powf(1.0 / q);
    Ok(JumpReport {
        face: face.to_string(),
        q,
        epsilons: JUMP_EPSILONS.to_vec(),
        jumps,
        sup,
        mean_q,
    })
}

/// Intercept at zero of the least-squares quadratic through `(eps, value)` pairs.
fn extrapolate_to_zero(pts: &[(f64, f64)]) -> f64 {
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
    if pts.len() < 3 || scale == 0.0 {
        return pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    }
    // normal equations for v = c0 + c1 t + c2 t^2 with t = eps / scale
    let mut a = [[0.0f64; 4]; 3];
    for &(e, v) in pts {
        let t = e / scale;
        let basis = [1.0, t, t * t];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += basis[i] * basis[j];
            }
            a[i][3] += basis[i] * v;
        }
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let pivot = a[col];
                let f = a[row][col] / pivot[col];
                for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    a[0][3] / a[0][0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::central_difference;
    use crate::fields::{ConstField, PolyField, Sec7Field, TrigField};
    use crate::geometry::CollarPart;

    fn spec() -> MushroomSpec {
        MushroomSpec::build(3, 5.0, 1.0, 3).unwrap()
    }

    #[test]
    fn examples() {
        let s = spec();
        let one = ConstField { n: 3, c: 1.0 };
        let e = Extension::new(&s, &one).unwrap();
        assert_eq!(e.value_at(&[0.5, 0.5, 1.5]).unwrap(), 0.5);
        assert_eq!(e.gradient_at(&[0.5, 0.5, 1.5]).unwrap(), vec![0.0, 0.0, -1.0]);
        assert_eq!(e.value_at(&[0.5, 0.5, 0.5]).unwrap(), 1.0);
        assert!(e.value_at(&[0.5, 0.5, 3.5]).is_err());
        // stem collar point with L^i = L^o = 1/2 at x_n = 1.5
        let r = s.stem_radius(1);
        let x = [s.center(1)[0] + 1.5 * r, s.center(1)[1], 1.5];
        assert_eq!(s.classify(&x), RegionTag::StemCollar(1, CollarPart::Side));
        assert!((e.value_at(&x).unwrap() - 0.75).abs() < 1e-9);
        // head collar side region: |grad E| = 2/(2 tr)
        let tr = s.head_radius(1);
        let x = [s.center(1)[0] + 1.5 * tr, s.center(1)[1], 2.5];
        let g = e.gradient_at(&x).unwrap();
        assert!((crate::field::norm(&g) - 1.0 / tr).abs() < 1e-12);
        let fd = central_difference(&|y: &[f64]| e.value(y), &x, 1e-7);
        assert!((fd[0] - g[0]).abs() < 1e-6 * (1.0 / tr));
    }

    #[test]
    fn restriction_and_linearity() {
        let s = spec();
        let a = PolyField { n: 3, degree: 2 };
        let b = TrigField { n: 3, freq: 2.0 };
        let comb = Combination {
            dim: 3,
            constant: 0.0,
            terms: vec![(2.0, &a as &dyn ScalarField), (-0.5, &b)],
        };
        let ea = Extension::new(&s, &a).unwrap();
        let eb = Extension::new(&s, &b).unwrap();
        let ec = Extension::new(&s, &comb).unwrap();
        let mut rng = rng::stream(3, 0, 0);
        use rand::Rng;
        for _ in 0..5000 {
            let x: Vec<f64> = vec![rng.random(), rng.random(), 3.0 * rng.random::<f64>()];
            let tag = s.classify(&x);
            if tag == RegionTag::Outside && !ea.in_ambient(&x) {
                continue;
            }
            if tag.in_domain() {
                assert_eq!(ea.value_at(&x).unwrap(), a.value(&x));
            }
            let lhs = ec.value_at(&x).unwrap();
            let rhs = 2.0 * ea.value_at(&x).unwrap() - 0.5 * eb.value_at(&x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "{x:?} {tag}");
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences_in_collars() {
        let s = spec();
        let u = TrigField { n: 3, freq: 1.3 };
        let e = Extension::new(&s, &u).unwrap();
        let mut rng = rng::stream(4, 0, 0);
        use rand::Rng;
        for (k, stem) in [(1, true), (1, false), (2, false)] {
            {
                let (rho, base) = if stem {
                    (s.stem_radius(k), 1.0)
                } else {
                    (s.head_radius(k), 2.0)
                };
                for _ in 0..300 {
                    let th: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    let off = rho * (0.05 + 0.9 * rng.random::<f64>());
                    let xn = 0.05 + 0.9 * rng.random::<f64>();
                    let z = s.center(k);
                    let x = [z[0] + (rho + off) * th.cos(), z[1] + (rho + off) * th.sin(), base + xn];
                    let tag = s.classify(&x);
                    if tag.index() != Some(k) {
                        continue;
                    }
                    // stay clear of branch interfaces
                    if (off + xn - rho).abs() < 1e-3 * rho || (off + 1.0 - xn - rho).abs() < 1e-3 * rho {
                        continue;
                    }
                    let g = e.gradient_at(&x).unwrap();
                    let h = 1e-6 * rho;
                    let fd = central_difference(&|y: &[f64]| e.value(y), &x, h);
                    let scale = crate::field::norm(&g).max(1.0);
                    for i in 0..3 {
                        assert!((fd[i] - g[i]).abs() < 1e-6 * scale, "{tag} {x:?}: {fd:?} vs {g:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn homogenize_properties() {
        let s = spec();
        let c = ConstField { n: 3, c: 2.5 };
        let t = homogenize(&s, &c, 2.5);
        for x in [[0.5, 0.5, 1.5], [0.9, 0.1, 2.9], [0.3, 0.3, 0.2]] {
            assert!((t.value(&x) - 2.5).abs() < 1e-15);
        }
        let xn = FnFieldXn;
        let t = homogenize(&s, &xn, 0.7);
        assert_eq!(t.value(&[0.5, 0.5, 0.5]), 0.5);
        let e = Extension::new(&s, &t.shifted).unwrap();
        assert_eq!(t.gradient(&[0.5, 0.5, 1.5]), e.gradient_at(&[0.5, 0.5, 1.5]).unwrap());
    }

    struct FnFieldXn;
    impl ScalarField for FnFieldXn {
        fn dim(&self) -> usize {
            3
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[2]
        }
    }

    #[test]
    fn jumps() {
        let s = spec();
        let u = TrigField { n: 3, freq: 1.0 };
        for face in [
            Face::StemLateral(1),
            Face::StemCollarOuter(2),
            Face::CubeTop(1),
            Face::HeadLateral(1),
        ] {
            let rep = trace_jump(&s, &u, face, 1.0).unwrap();
            assert!(rep.sup < 1e-8, "{face}: {}", rep.sup);
        }
        let one = ConstField { n: 3, c: 1.0 };
        let rep = trace_jump(&s, &one, Face::HeadBottom(1), 1.0).unwrap();
        assert!((rep.sup - 1.0).abs() < 1e-6);
        assert!(rep.jumps.iter().all(|j| (j.abs() - 1.0).abs() < 1e-6));
        assert!("nope:1".parse::<Face>().is_err());
        assert!(trace_jump(&s, &one, Face::StemLateral(9), 1.0).is_err());
        let f = Sec7Field::new(&s, 1).unwrap();
        let rep = trace_jump(&s, &f, Face::HeadLateral(1), 1.0).unwrap();
        assert!(rep.sup < 1e-8);
    }

    #[test]
    fn thin_stem_collar_gradient_stays_bounded() {
        // stem radius 2^-33: Cartesian differences cannot resolve the collar
        let s = MushroomSpec::build(3, 5.0, 1.0, 3).unwrap();
        let u = PolyField { n: 3, degree: 2 };
        let ext = Extension::new(&s, &u).unwrap();
        let k = 3;
        let rho = s.stem_radius(k);
        let z = s.center(k).to_vec();
        for (delta, eta) in [(0.3, 0.2), (0.01, 0.01), (1e-4, 0.5), (0.5, 1e-6)] {
            let dir = vec![0.6, 0.8];
            let x = vec![
                z[0] + rho * (1.0 + delta) * dir[0],
                z[1] + rho * (1.0 + delta) * dir[1],
                1.0 + rho * eta,
            ];
            let sample = Sample {
                x,
                local: Some(LocalCoords {
                    rho,
                    offset: rho * delta,
                    dir,
                    xn: rho * eta,
                    top: 1.0 - rho * eta,
                }),
            };
            let g = ext
                .branch_gradient(RegionTag::StemCollar(k, CollarPart::Lower), &sample)
                .unwrap();
            let norm = crate::field::norm(&g);
            assert!(norm < 10.0, "delta {delta} eta {eta}: |grad| = {norm}");
        }
    }
}
