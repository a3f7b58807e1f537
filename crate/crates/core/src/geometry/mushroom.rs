//! The mushroom domain: a unit cube carrying thin stems capped by wider heads.

use serde::{Deserialize, Serialize};

use super::{distance, unit_ball_volume, CollarPart, RegionTag};
use crate::error::{Error, Result};
use crate::logspace::{log2_sum, Log2Value};

/// How the dyadic centres are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Low-corner subcube for the head, diagonally opposite subcube as the next parent.
    Diagonal,
    /// Centres supplied directly (testing only).
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MushroomSpec {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub m: usize,
    /// Whether `p > (n-1)q/(n-1-q)`.
    pub strict_regime: bool,
    pub placement: Placement,
    /// `centers[k-1]` is `z_k` in the base `(0,1)^{n-1}`.
    pub centers: Vec<Vec<f64>>,
    pub log2_head_radius: Vec<f64>,
    pub log2_stem_radius: Vec<f64>,
    pub head_radius: Vec<f64>,
    pub stem_radius: Vec<f64>,
}

/// `q*_{n-1} = (n-1)q/(n-1-q)`.
pub fn critical_exponent(n: usize, q: f64) -> f64 {
    let d = (n - 1) as f64;
    d * q / (d - q)
}

/// `log2` of the stem radius `r_k = (4^{-k})^{1/(n-1) + p/q}`.
pub fn log2_stem_radius(n: usize, p: f64, q: f64, k: usize) -> f64 {
    -2.0 * k as f64 * (1.0 / (n - 1) as f64 + p / q)
}

/// `log2` of the head radius `2^{-(k+1)}`.
pub fn log2_head_radius(k: usize) -> f64 {
    -((k + 1) as f64)
}

fn check_params(n: usize, p: f64, q: f64, m: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::invalid(format!("n must be at least 3, got {n}")));
    }
    if !(q >= 1.0 && q < (n - 1) as f64) {
        return Err(Error::invalid(format!("q must lie in [1, n-1), got {q}")));
    }
    if !(p > q) || !p.is_finite() {
        return Err(Error::invalid(format!("p must exceed q, got p={p}, q={q}")));
    }
    if m < 1 {
        return Err(Error::invalid("m must be at least 1"));
    }
    Ok(())
}

/// Diagonal-corner centres `z_1, ..., z_m` by explicit dyadic subdivision.
fn diagonal_centers(n: usize, m: usize) -> Vec<Vec<f64>> {
    let mut lo = 0.0f64;
    let mut side = 1.0f64;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let half = side / 2.0;
        out.push(vec![lo + half / 2.0; n - 1]);
        lo += half;
        side = half;
    }
    out
}

impl MushroomSpec {
    pub fn build(n: usize, p: f64, q: f64, m: usize) -> Result<Self> {
        check_params(n, p, q, m)?;
        Ok(Self::assemble(n, p, q, m, Placement::Diagonal, diagonal_centers(n, m)))
    }

    /// Same radii, caller-chosen centres. Used to exercise placement validation.
    pub fn with_centers(n: usize, p: f64, q: f64, centers: Vec<Vec<f64>>) -> Result<Self> {
        let m = centers.len();
        check_params(n, p, q, m)?;
        if centers.iter().any(|z| z.len() != n - 1) {
            return Err(Error::invalid("every centre needs n-1 coordinates"));
        }
        Ok(Self::assemble(n, p, q, m, Placement::Custom, centers))
    }

    fn assemble(n: usize, p: f64, q: f64, m: usize, placement: Placement, centers: Vec<Vec<f64>>) -> Self {
        let log2_head_radius: Vec<f64> = (1..=m).map(log2_head_radius).collect();
        let log2_stem_radius: Vec<f64> = (1..=m).map(|k| log2_stem_radius(n, p, q, k)).collect();
        Self {
            n,
            p,
            q,
            m,
            strict_regime: p > critical_exponent(n, q),
            placement,
            centers,
            head_radius: log2_head_radius.iter().map(|l| l.exp2()).collect(),
            stem_radius: log2_stem_radius.iter().map(|l| l.exp2()).collect(),
            log2_head_radius,
            log2_stem_radius,
        }
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k - 1]
    }

    pub fn head_radius(&self, k: usize) -> f64 {
        self.head_radius[k - 1]
    }

    pub fn stem_radius(&self, k: usize) -> f64 {
        self.stem_radius[k - 1]
    }

    /// Radial distance of `x` from the axis through `z_k`.
    pub fn radial(&self, k: usize, x: &[f64]) -> f64 {
        distance(&x[..self.n - 1], self.center(k))
    }

    /// Unit vector from `z_k` towards the projection of `x`, if it is defined.
    pub fn radial_direction(&self, k: usize, x: &[f64]) -> Option<Vec<f64>> {
        let z = self.center(k);
        let s = self.radial(k, x);
        if s == 0.0 {
            return None;
        }
        Some(x[..self.n - 1].iter().zip(z).map(|(a, b)| (a - b) / s).collect())
    }

    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.n, self.q)
    }

    /// Region label of `x`. Domain pieces win over collars, collars over the slab,
    /// and among overlapping collars the one with the largest index wins.
    pub fn classify(&self, x: &[f64]) -> RegionTag {
        let n = self.n;
        if x.len() != n || x.iter().any(|v| !v.is_finite()) {
            return RegionTag::Outside;
        }
        let xn = x[n - 1];
        if !(xn > 0.0 && xn < 3.0) || x[..n - 1].iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return RegionTag::Outside;
        }
        if xn < 1.0 {
            return RegionTag::Cube;
        }
        let radii: Vec<f64> = (1..=self.m).map(|k| self.radial(k, x)).collect();
        let stem_band = xn <= 2.0;
        if stem_band {
            for k in 1..=self.m {
                if radii[k - 1] < self.stem_radius(k) {
                    return RegionTag::Stem(k);
                }
            }
        } else {
            for k in 1..=self.m {
                if radii[k - 1] < self.head_radius(k) {
                    return RegionTag::Head(k);
                }
            }
        }
        if stem_band {
            for k in (1..=self.m).rev() {
                let r = self.stem_radius(k);
                let s = radii[k - 1];
                if s <= 2.0 * r {
                    return RegionTag::StemCollar(k, collar_part(s - r, xn - 1.0, r));
                }
            }
        }
        if xn >= 2.0 {
            for k in (1..=self.m).rev() {
                let r = self.head_radius(k);
                let s = radii[k - 1];
                if s <= 2.0 * r {
                    return RegionTag::HeadCollar(k, collar_part(s - r, xn - 2.0, r));
                }
            }
        }
        if stem_band {
            return RegionTag::Slab;
        }
        RegionTag::Outside
    }

    /// Checks disjointness and containment of the doubled head and stem balls.
    pub fn validate_placement(&self) -> PlacementReport {
        let mut violations = Vec::new();
        let m = self.m;
        for k in 1..=m {
            for j in (k + 1)..=m {
                let d = distance(self.center(k), self.center(j));
                if d < 2.0 * (self.head_radius(k) + self.head_radius(j)) {
                    violations.push(Violation::HeadOverlap { k, j });
                }
            }
        }
        for k in 1..=m {
            for j in (k + 1)..=m {
                let d = distance(self.center(k), self.center(j));
                if d < 2.0 * (self.stem_radius(k) + self.stem_radius(j)) {
                    violations.push(Violation::StemOverlap { k, j });
                    violations.push(Violation::PistonOverlap { k, j });
                }
            }
        }
        for k in 1..=m {
            let z = self.center(k);
            for (kind, radius) in [
                (BallKind::Head, 2.0 * self.head_radius(k)),
                (BallKind::Stem, 2.0 * self.stem_radius(k)),
            ] {
                if z.iter().any(|&c| c - radius < 0.0 || c + radius > 1.0) {
                    violations.push(Violation::NotContained { kind, k });
                }
            }
        }
        PlacementReport { m, violations }
    }

    /// Closed-form `n`-volume of a region.
    pub fn region_measure(&self, tag: RegionTag) -> Result<Log2Value> {
        let n = self.n;
        let omega = unit_ball_volume(n - 1).log2();
        let d = (n - 1) as f64;
        let check = |k: usize| -> Result<()> {
            if k == 0 || k > self.m {
                Err(Error::UnsupportedRegion(format!("{tag} (m = {})", self.m)))
            } else {
                Ok(())
            }
        };
        match tag {
            RegionTag::Cube => Ok(Log2Value::from_log2(0.0)),
            RegionTag::Stem(k) => {
                check(k)?;
                Ok(Log2Value::from_log2(omega + d * self.log2_stem_radius[k - 1]))
            }
            RegionTag::Head(k) => {
                check(k)?;
                Ok(Log2Value::from_log2(omega + d * self.log2_head_radius[k - 1]))
            }
            RegionTag::StemCollar(k, part) => {
                check(k)?;
                Ok(collar_piece_measure(n, self.log2_stem_radius[k - 1], part))
            }
            RegionTag::HeadCollar(k, part) => {
                check(k)?;
                Ok(collar_piece_measure(n, self.log2_head_radius[k - 1], part))
            }
            RegionTag::Slab => {
                // unit box minus the doubled stem cylinders
                let holes: Vec<f64> = (0..self.m)
                    .map(|i| omega + d * (self.log2_stem_radius[i] + 1.0))
                    .collect();
                let h = log2_sum(&holes).exp2();
                Ok(Log2Value::from_linear(1.0 - h))
            }
            RegionTag::Outside => Err(Error::UnsupportedRegion(tag.to_string())),
        }
    }

    /// Sum of the closed-form measures of the cube, stems and heads.
    pub fn domain_measure(&self) -> Log2Value {
        let mut terms = vec![0.0];
        for k in 1..=self.m {
            terms.push(self.region_measure(RegionTag::Stem(k)).unwrap().log2);
            terms.push(self.region_measure(RegionTag::Head(k)).unwrap().log2);
        }
        Log2Value::from_log2(log2_sum(&terms))
    }

    /// Every region tag other than `Outside`, in a fixed order.
    pub fn all_tags(&self) -> Vec<RegionTag> {
        let mut tags = vec![RegionTag::Cube];
        for k in 1..=self.m {
            tags.push(RegionTag::Stem(k));
            tags.push(RegionTag::Head(k));
        }
        for k in 1..=self.m {
            for part in CollarPart::ALL {
                tags.push(RegionTag::StemCollar(k, part));
            }
            for part in CollarPart::ALL {
                tags.push(RegionTag::HeadCollar(k, part));
            }
        }
        tags.push(RegionTag::Slab);
        tags
    }

    /// JSON description: parameters plus the derived centres and radii.
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "m": self.m,
            "placement": self.placement,
            "derived": {
                "z": self.centers,
                "log2_tilde_r": self.log2_head_radius,
                "log2_r": self.log2_stem_radius,
                "strict_regime": self.strict_regime,
                "critical_exponent": self.critical_exponent(),
            }
        })
    }
}

/// Sub-region of a collar point given its offset `d = s - rho` from the inner
/// wall, its local axial coordinate `xn` in `[0,1]` and the inner radius `rho`.
/// Points on a branch interface belong to the side part.
pub fn collar_part(offset: f64, xn: f64, rho: f64) -> CollarPart {
    collar_part_ends(offset, xn, 1.0 - xn, rho)
}

/// [`collar_part`] with both axial distances to the ends given.
pub fn collar_part_ends(offset: f64, bottom: f64, top: f64, rho: f64) -> CollarPart {
    if offset + bottom < rho {
        CollarPart::Lower
    } else if offset + top < rho {
        CollarPart::Upper
    } else {
        CollarPart::Side
    }
}

/// `∫_0^1 (1+t)^m (1-t) dt`, the reference wedge volume factor.
fn wedge_factor(m: usize) -> f64 {
    let m = m as f64;
    2.0 * ((m + 1.0).exp2() - 1.0) / (m + 1.0) - ((m + 2.0).exp2() - 1.0) / (m + 2.0)
}

/// Measure of a collar piece around a cylinder of inner radius `rho = 2^{log2_rho}`
/// and unit height.
pub fn collar_piece_measure(n: usize, log2_rho: f64, part: CollarPart) -> Log2Value {
    let area = super::sphere_area(n - 1);
    let d = (n - 1) as f64;
    let wedge = area.log2() + n as f64 * log2_rho + wedge_factor(n - 2).log2();
    match part {
        CollarPart::Lower | CollarPart::Upper => Log2Value::from_log2(wedge),
        CollarPart::Side => {
            let annulus = unit_ball_volume(n - 1).log2() + d * log2_rho + (d.exp2() - 1.0).log2();
            let side = crate::logspace::log2_sub(annulus, wedge + 1.0);
            Log2Value::from_log2(side)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    Head,
    Stem,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    HeadOverlap { k: usize, j: usize },
    StemOverlap { k: usize, j: usize },
    PistonOverlap { k: usize, j: usize },
    NotContained { kind: BallKind, k: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::HeadOverlap { k: a, j: b } => write!(f, "doubled heads {a} and {b} overlap"),
            Violation::StemOverlap { k: a, j: b } => write!(f, "doubled stems {a} and {b} overlap"),
            Violation::PistonOverlap { k: a, j: b } => write!(f, "pistons {a} and {b} overlap"),
            Violation::NotContained { kind, k } => {
                write!(f, "doubled {kind:?} ball {k} leaves the base square")
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlacementReport {
    pub m: usize,
    pub violations: Vec<Violation>,
}

impl PlacementReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}
