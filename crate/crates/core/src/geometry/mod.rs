//! Domains: the mushroom construction, the comb of shrinking cylinders and
//! the outward cusp.

pub mod comb;
pub mod cusp;
pub mod mushroom;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use comb::{CombSpec, CombTag};
pub use cusp::{CuspSpec, Profile};
pub use mushroom::{MushroomSpec, PlacementReport, Violation};

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^d` (`d = 0` gives 1).
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Surface measure of the unit sphere `S^{d-1}` in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    d as f64 * unit_ball_volume(d)
}

/// Euclidean distance between two points of equal length.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Where a collar point sits relative to the cut-off branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CollarPart {
    /// Wedge at the attaching (lower local) end.
    Lower,
    /// Wedge at the far (upper local) end.
    Upper,
    /// Everything else, including the branch interfaces.
    Side,
}

impl CollarPart {
    pub const ALL: [CollarPart; 3] = [CollarPart::Lower, CollarPart::Upper, CollarPart::Side];

    fn code(self) -> &'static str {
        match self {
            CollarPart::Lower => "DL",
            CollarPart::Upper => "DU",
            CollarPart::Side => "side",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "DL" => Some(CollarPart::Lower),
            "DU" => Some(CollarPart::Upper),
            "side" => Some(CollarPart::Side),
            _ => None,
        }
    }
}

/// Region labels of the mushroom domain and its ambient cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionTag {
    Cube,
    Stem(usize),
    Head(usize),
    StemCollar(usize, CollarPart),
    HeadCollar(usize, CollarPart),
    Slab,
    Outside,
}

impl RegionTag {
    /// True for the three kinds of region that make up the domain itself.
    pub fn in_domain(&self) -> bool {
        matches!(self, RegionTag::Cube | RegionTag::Stem(_) | RegionTag::Head(_))
    }

    pub fn index(&self) -> Option<usize> {
        match *self {
            RegionTag::Stem(k) | RegionTag::Head(k) | RegionTag::StemCollar(k, _) | RegionTag::HeadCollar(k, _) => {
                Some(k)
            }
            _ => None,
        }
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionTag::Cube => write!(f, "cube"),
            RegionTag::Stem(k) => write!(f, "stem:{k}"),
            RegionTag::Head(k) => write!(f, "head:{k}"),
            RegionTag::StemCollar(k, p) => write!(f, "stem_collar:{k}:{}", p.code()),
            RegionTag::HeadCollar(k, p) => write!(f, "head_collar:{k}:{}", p.code()),
            RegionTag::Slab => write!(f, "slab"),
            RegionTag::Outside => write!(f, "outside"),
        }
    }
}

impl FromStr for RegionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("unrecognised region tag '{s}'"));
        let idx = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["cube"] => Ok(RegionTag::Cube),
            ["slab"] => Ok(RegionTag::Slab),
            ["outside"] => Ok(RegionTag::Outside),
            ["stem", k] => Ok(RegionTag::Stem(idx(k)?)),
            ["head", k] => Ok(RegionTag::Head(idx(k)?)),
            ["stem_collar", k, p] => Ok(RegionTag::StemCollar(idx(k)?, CollarPart::parse(p).ok_or_else(bad)?)),
            ["head_collar", k, p] => Ok(RegionTag::HeadCollar(idx(k)?, CollarPart::parse(p).ok_or_else(bad)?)),
            _ => Err(bad()),
        }
    }
}

/// Label attached to an integration region. Fields use it as an evaluation
/// hint so that points inside cylinders far thinner than a unit in the last
/// place of their centre still resolve to the right branch.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionLabel {
    Mushroom(RegionTag),
    Comb(CombTag),
    Named(String),
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionLabel::Mushroom(t) => write!(f, "{t}"),
            RegionLabel::Comb(t) => write!(f, "{t}"),
            RegionLabel::Named(s) => write!(f, "{s}"),
        }
    }
}

/// Any of the supported domains.
#[derive(Clone, Debug)]
pub enum Domain {
    Mushroom(MushroomSpec),
    Comb(CombSpec),
    Cusp(CuspSpec),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Mushroom(s) => s.n,
            Domain::Comb(c) => c.n,
            Domain::Cusp(c) => c.n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn tag_round_trip() {
        let tags = [
            RegionTag::Cube,
            RegionTag::Slab,
            RegionTag::Outside,
            RegionTag::Stem(3),
            RegionTag::Head(12),
            RegionTag::StemCollar(2, CollarPart::Upper),
            RegionTag::HeadCollar(1, CollarPart::Lower),
            RegionTag::HeadCollar(4, CollarPart::Side),
        ];
        for t in tags {
            assert_eq!(t.to_string().parse::<RegionTag>().unwrap(), t);
        }
        assert!("stem:x".parse::<RegionTag>().is_err());
        assert!("head_collar:1:XY".parse::<RegionTag>().is_err());
    }
}
