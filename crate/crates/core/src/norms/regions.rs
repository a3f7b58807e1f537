//! Integration regions for the three domain families.

use std::fmt;
use std::str::FromStr;

use super::shapes::{RadiusFn, Shape};
use super::Region;
use crate::error::{Error, Result};
use crate::geometry::mushroom::collar_part;
use crate::geometry::{CollarPart, CombSpec, CombTag, CuspSpec, MushroomSpec, Profile, RegionLabel, RegionTag};

/// Collars thinner than this cannot carry local coordinates in `f64`.
const MIN_LOG2_RHO: f64 = -1000.0;

/// Which parts of the ambient cylinder to integrate over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    /// Every region where an extended field can be nonzero.
    All,
    /// The domain itself: cube, stems and heads.
    Omega,
    Cube,
    Stems,
    Heads,
    Collars,
    Slab,
    /// Stem, head and both collars of one index.
    Index(usize),
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::All => write!(f, "all"),
            Selection::Omega => write!(f, "omega"),
            Selection::Cube => write!(f, "cube"),
            Selection::Stems => write!(f, "stems"),
            Selection::Heads => write!(f, "heads"),
            Selection::Collars => write!(f, "collars"),
            Selection::Slab => write!(f, "slab"),
            Selection::Index(k) => write!(f, "index:{k}"),
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Selection::All,
            "omega" => Selection::Omega,
            "cube" => Selection::Cube,
            "stems" => Selection::Stems,
            "heads" => Selection::Heads,
            "collars" => Selection::Collars,
            "slab" => Selection::Slab,
            _ => match s.strip_prefix("index:").and_then(|k| k.parse().ok()) {
                Some(k) => Selection::Index(k),
                None => return Err(Error::invalid(format!("unknown region selection '{s}'"))),
            },
        })
    }
}

fn mush(tag: RegionTag, shape: Shape) -> Region {
    Region {
        label: RegionLabel::Mushroom(tag),
        shape,
    }
}

fn unit_box(n: usize, lo_n: f64, hi_n: f64) -> Shape {
    let mut lo = vec![0.0; n];
    let mut hi = vec![1.0; n];
    lo[n - 1] = lo_n;
    hi[n - 1] = hi_n;
    Shape::Box { lo, hi }
}

fn cylinder(center: &[f64], log2_rho: f64, outer: f64, axial: (f64, f64)) -> Shape {
    Shape::Shell {
        center: center.to_vec(),
        log2_rho,
        inner: 0.0,
        outer,
        axial,
        base: axial.0,
    }
}

fn check_rho(log2_rho: f64, what: &str, k: usize) -> Result<()> {
    if log2_rho < MIN_LOG2_RHO {
        return Err(Error::Numerical(format!(
            "{what} {k} has log2 radius {log2_rho:.1}, below the supported {MIN_LOG2_RHO}"
        )));
    }
    Ok(())
}

/// Region tag and shape for one labelled mushroom region.
pub fn mushroom_region(spec: &MushroomSpec, tag: RegionTag) -> Result<Region> {
    let n = spec.n;
    if let Some(k) = tag.index() {
        if k == 0 || k > spec.m {
            return Err(Error::invalid(format!("index {k} outside 1..={}", spec.m)));
        }
    }
    Ok(match tag {
        RegionTag::Cube => mush(tag, unit_box(n, 0.0, 1.0)),
        RegionTag::Stem(k) => mush(
            tag,
            cylinder(spec.center(k), spec.log2_stem_radius[k - 1], 1.0, (1.0, 2.0)),
        ),
        RegionTag::Head(k) => mush(
            tag,
            cylinder(spec.center(k), spec.log2_head_radius[k - 1], 1.0, (2.0, 3.0)),
        ),
        RegionTag::StemCollar(k, part) => {
            check_rho(spec.log2_stem_radius[k - 1], "stem collar", k)?;
            mush(
                tag,
                Shape::Collar {
                    center: spec.center(k).to_vec(),
                    log2_rho: spec.log2_stem_radius[k - 1],
                    base: 1.0,
                    part,
                },
            )
        }
        RegionTag::HeadCollar(k, part) => mush(
            tag,
            Shape::Collar {
                center: spec.center(k).to_vec(),
                log2_rho: spec.log2_head_radius[k - 1],
                base: 2.0,
                part,
            },
        ),
        RegionTag::Slab => {
            let holes = (1..=spec.m)
                .map(|k| cylinder(spec.center(k), spec.log2_stem_radius[k - 1], 2.0, (1.0, 2.0)))
                .collect();
            mush(
                tag,
                Shape::Difference {
                    base: Box::new(unit_box(n, 1.0, 2.0)),
                    holes,
                },
            )
        }
        RegionTag::Outside => return Err(Error::UnsupportedRegion("outside".into())),
    })
}

/// Tags selected from a mushroom domain, in a fixed order.
pub fn mushroom_tags(spec: &MushroomSpec, sel: Selection) -> Result<Vec<RegionTag>> {
    let m = spec.m;
    let collars = |k: usize| {
        let mut v: Vec<RegionTag> = CollarPart::ALL.iter().map(|&p| RegionTag::StemCollar(k, p)).collect();
        v.extend(CollarPart::ALL.iter().map(|&p| RegionTag::HeadCollar(k, p)));
        v
    };
    Ok(match sel {
        Selection::All => {
            let mut v = vec![RegionTag::Cube];
            v.extend((1..=m).map(RegionTag::Stem));
            v.extend((1..=m).map(RegionTag::Head));
            v.extend((1..=m).flat_map(collars));
            v.push(RegionTag::Slab);
            v
        }
        Selection::Omega => {
            let mut v = vec![RegionTag::Cube];
            v.extend((1..=m).map(RegionTag::Stem));
            v.extend((1..=m).map(RegionTag::Head));
            v
        }
        Selection::Cube => vec![RegionTag::Cube],
        Selection::Stems => (1..=m).map(RegionTag::Stem).collect(),
        Selection::Heads => (1..=m).map(RegionTag::Head).collect(),
        Selection::Collars => (1..=m).flat_map(collars).collect(),
        Selection::Slab => vec![RegionTag::Slab],
        Selection::Index(k) => {
            if k == 0 || k > m {
                return Err(Error::invalid(format!("index {k} outside 1..={m}")));
            }
            let mut v = vec![RegionTag::Stem(k), RegionTag::Head(k)];
            v.extend(collars(k));
            v
        }
    })
}

pub fn mushroom_regions(spec: &MushroomSpec, sel: Selection) -> Result<Vec<Region>> {
    mushroom_tags(spec, sel)?
        .into_iter()
        .map(|t| mushroom_region(spec, t))
        .collect()
}

/// Pieces of a collar cross-section at local height `xn_loc`, as offset
/// ranges `(δ0, δ1)` in units of `ρ`.
fn collar_slice_parts(xn_loc: f64, rho: f64) -> Vec<(CollarPart, f64, f64)> {
    let mut cuts = vec![0.0, 1.0];
    for c in [1.0 - xn_loc / rho, 1.0 - (1.0 - xn_loc) / rho] {
        if c > 0.0 && c < 1.0 {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (collar_part(mid * rho, xn_loc, rho), w[0], w[1])
        })
        .collect()
}

fn plane_shell(center: &[f64], log2_rho: f64, inner: f64, outer: f64, xn: f64, base: f64) -> Shape {
    Shape::PlaneShell {
        center: center.to_vec(),
        log2_rho,
        inner,
        outer,
        xn,
        base,
    }
}

/// The slice `x_n = t` of the ambient cylinder, split by region.
pub fn mushroom_slice(spec: &MushroomSpec, t: f64) -> Result<Vec<Region>> {
    let n = spec.n;
    let plane_box = |xn: f64| Shape::PlaneBox {
        lo: vec![0.0; n - 1],
        hi: vec![1.0; n - 1],
        xn,
    };
    if !(t > 0.0 && t < 3.0) || t == 1.0 || t == 2.0 {
        return Err(Error::invalid(format!("slice x_n = {t} is not inside a single layer")));
    }
    let mut out = Vec::new();
    if t < 1.0 {
        out.push(mush(RegionTag::Cube, plane_box(t)));
        return Ok(out);
    }
    let (base, log2_r, stem) = if t < 2.0 {
        (1.0, &spec.log2_stem_radius, true)
    } else {
        (2.0, &spec.log2_head_radius, false)
    };
    let xn_loc = t - base;
    for k in 1..=spec.m {
        let lr = log2_r[k - 1];
        let rho = lr.exp2();
        let c = spec.center(k);
        let core = if stem { RegionTag::Stem(k) } else { RegionTag::Head(k) };
        out.push(mush(core, plane_shell(c, lr, 0.0, 1.0, t, base)));
        for (part, a, b) in collar_slice_parts(xn_loc, rho) {
            let tag = if stem {
                RegionTag::StemCollar(k, part)
            } else {
                RegionTag::HeadCollar(k, part)
            };
            out.push(mush(tag, plane_shell(c, lr, 1.0 + a, 1.0 + b, t, base)));
        }
    }
    if stem {
        let holes = (1..=spec.m)
            .map(|k| plane_shell(spec.center(k), spec.log2_stem_radius[k - 1], 0.0, 2.0, t, base))
            .collect();
        out.push(mush(
            RegionTag::Slab,
            Shape::Difference {
                base: Box::new(plane_box(t)),
                holes,
            },
        ));
    }
    Ok(out)
}

fn comb_region(comb: &CombSpec, tag: CombTag) -> Result<Region> {
    let n = comb.n;
    let shape = match tag {
        CombTag::Box => Shape::Box {
            lo: vec![0.0; n],
            hi: comb.box_hi.clone(),
        },
        CombTag::Cyl(k) | CombTag::HalfCyl(k) => {
            if k == 0 || k > comb.kmax {
                return Err(Error::invalid(format!("cylinder {k} outside 1..={}", comb.kmax)));
            }
            let axial = if matches!(tag, CombTag::Cyl(_)) {
                (-0.5, 0.0)
            } else {
                (-1.0, -0.5)
            };
            Shape::Shell {
                center: comb.center(k).to_vec(),
                log2_rho: comb.log2_radius[k - 1],
                inner: 0.0,
                outer: 1.0,
                axial,
                base: -1.0,
            }
        }
        CombTag::Outside => return Err(Error::UnsupportedRegion("outside".into())),
    };
    Ok(Region {
        label: RegionLabel::Comb(tag),
        shape,
    })
}

/// Box plus both halves of every cylinder. With `only` set, just cylinder `k`.
pub fn comb_regions(comb: &CombSpec, only: Option<usize>) -> Result<Vec<Region>> {
    let mut tags = Vec::new();
    match only {
        Some(k) => {
            tags.push(CombTag::Cyl(k));
            tags.push(CombTag::HalfCyl(k));
        }
        None => {
            tags.push(CombTag::Box);
            for k in 1..=comb.kmax {
                tags.push(CombTag::Cyl(k));
                tags.push(CombTag::HalfCyl(k));
            }
        }
    }
    tags.into_iter().map(|t| comb_region(comb, t)).collect()
}

/// The slice `x_n = t` of the comb, split by region.
pub fn comb_slice(comb: &CombSpec, t: f64) -> Result<Vec<Region>> {
    let n = comb.n;
    if t > 0.0 && t < comb.box_hi[n - 1] {
        return Ok(vec![Region {
            label: RegionLabel::Comb(CombTag::Box),
            shape: Shape::PlaneBox {
                lo: vec![0.0; n - 1],
                hi: comb.box_hi[..n - 1].to_vec(),
                xn: t,
            },
        }]);
    }
    if !(t > -1.0 && t < 0.0) || t == -0.5 {
        return Err(Error::invalid(format!(
            "slice x_n = {t} does not meet the comb in a single layer"
        )));
    }
    Ok((1..=comb.kmax)
        .map(|k| Region {
            label: RegionLabel::Comb(if t > -0.5 { CombTag::Cyl(k) } else { CombTag::HalfCyl(k) }),
            shape: plane_shell(comb.center(k), comb.log2_radius[k - 1], 0.0, 1.0, t, -1.0),
        })
        .collect())
}

/// The cusp domain as the ball plus the pieces of the cusp sticking out of it.
pub fn cusp_regions(cusp: &CuspSpec) -> Vec<Region> {
    let n = cusp.n;
    let c = cusp.ball_center[0];
    let r = cusp.ball_radius;
    let mut out = vec![Region {
        label: RegionLabel::Named("ball".into()),
        shape: Shape::Ball {
            center: cusp.ball_center.clone(),
            radius: r,
        },
    }];
    let gap = |t: f64| cusp.profile.eval(t) - cusp.ball_section(t);
    let mut cuts = vec![0.0, 1.0];
    if c - r > 0.0 && c - r < 1.0 {
        cuts.push(c - r);
    }
    if let Profile::Table { t, .. } = &cusp.profile {
        cuts.extend(t.iter().copied().filter(|&x| x > 0.0 && x < 1.0));
    }
    let lo = (c - r).max(0.0);
    let steps = 400;
    for i in 0..steps {
        let a = lo + (1.0 - lo) * i as f64 / steps as f64;
        let b = lo + (1.0 - lo) * (i + 1) as f64 / steps as f64;
        if gap(a).signum() * gap(b).signum() < 0.0 {
            let (mut x0, mut x1) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if gap(x0).signum() * gap(mid).signum() <= 0.0 {
                    x1 = mid;
                } else {
                    x0 = mid;
                }
            }
            cuts.push(0.5 * (x0 + x1));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for (i, w) in cuts.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if gap(mid) <= 0.0 {
            continue;
        }
        let inner = if cusp.ball_section(mid) > 0.0 {
            RadiusFn::BallSection { center: c, radius: r }
        } else {
            RadiusFn::Zero
        };
        out.push(Region {
            label: RegionLabel::Named(format!("cusp:{i}")),
            shape: Shape::Revolution {
                t: (a, b),
                inner,
                outer: RadiusFn::Profile(cusp.profile.clone()),
                dim: n,
            },
        });
    }
    out
}

/// The open unit cube as a single region.
pub fn unit_cube(n: usize) -> Vec<Region> {
    vec![Region {
        label: RegionLabel::Named("cube".into()),
        shape: Shape::Box {
            lo: vec![0.0; n],
            hi: vec![1.0; n],
        },
    }]
}
