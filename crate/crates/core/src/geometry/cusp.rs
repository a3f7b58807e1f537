//! Outward cusp `{(t,z): 0<t<1, |z|<ψ(t)}` joined to the ball `B((2,0,...), √2)`.

use serde::{Deserialize, Serialize};

use super::unit_ball_volume;
use crate::error::{Error, Result};

/// Model profile `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `ψ(t) = t^s`, `s ≥ 1`.
    Power(f64),
    /// Piecewise linear through the given nodes.
    Table { t: Vec<f64>, psi: Vec<f64> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Power(s) => {
                if !(*s >= 1.0) || !s.is_finite() {
                    return Err(Error::invalid(format!("power profile needs s >= 1, got {s}")));
                }
            }
            Profile::Table { t, psi } => {
                if t.len() != psi.len() || t.len() < 2 {
                    return Err(Error::invalid(
                        "profile table needs matching t/psi arrays of length >= 2",
                    ));
                }
                if t[0] != 0.0 || psi[0] != 0.0 {
                    return Err(Error::invalid("profile must start at psi(0) = 0"));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("profile t grid must be strictly increasing"));
                }
                if psi.windows(2).any(|w| w[1] < w[0]) || psi.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("profile must be nondecreasing"));
                }
                if *t.last().unwrap() < 1.0 {
                    return Err(Error::invalid("profile table must reach t = 1"));
                }
                let one = self.eval(1.0);
                if (one - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("profile must satisfy psi(1) = 1, got {one}")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Power(s) => {
                if t <= 0.0 {
                    0.0
                } else {
                    t.powf(*s)
                }
            }
            Profile::Table { t: ts, psi } => {
                if t <= ts[0] {
                    return psi[0];
                }
                let i = ts.partition_point(|&v| v < t);
                if i >= ts.len() {
                    return *psi.last().unwrap();
                }
                let (t0, t1) = (ts[i - 1], ts[i]);
                psi[i - 1] + (psi[i] - psi[i - 1]) * (t - t0) / (t1 - t0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CuspSpec {
    pub n: usize,
    pub profile: Profile,
    pub ball_center: Vec<f64>,
    pub ball_radius: f64,
}

impl CuspSpec {
    pub fn build(n: usize, profile: Profile) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        profile.validate()?;
        let mut c = vec![0.0; n];
        c[0] = 2.0;
        Ok(Self {
            n,
            profile,
            ball_center: c,
            ball_radius: 2f64.sqrt(),
        })
    }

    pub fn in_cusp(&self, x: &[f64]) -> bool {
        let t = x[0];
        let z = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        t > 0.0 && t < 1.0 && z < self.profile.eval(t)
    }

    pub fn in_ball(&self, x: &[f64]) -> bool {
        super::distance(x, &self.ball_center) < self.ball_radius
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && (self.in_cusp(x) || self.in_ball(x))
    }

    /// Radius of the ball's cross-section at axial position `t` (0 outside).
    pub fn ball_section(&self, t: f64) -> f64 {
        let d = t - self.ball_center[0];
        (self.ball_radius * self.ball_radius - d * d).max(0.0).sqrt()
    }

    /// Cross-section radius of the union at `t`.
    pub fn section_radius(&self, t: f64) -> f64 {
        let cusp = if t > 0.0 && t < 1.0 { self.profile.eval(t) } else { 0.0 };
        cusp.max(self.ball_section(t))
    }

    /// Axial extent of the union.
    pub fn axial_range(&self) -> (f64, f64) {
        (0.0, self.ball_center[0] + self.ball_radius)
    }

    /// Diameter: the larger of the ball's own diameter and the farthest cusp
    /// point from the far side of the ball, scanned on a fine grid in `t`.
    pub fn diameter(&self) -> f64 {
        let c = self.ball_center[0];
        let mut best = 2.0 * self.ball_radius;
        let steps = 20_000;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let psi = self.profile.eval(t);
            let d = ((c - t).powi(2) + psi * psi).sqrt() + self.ball_radius;
            best = best.max(d);
        }
        best
    }

    /// Volume of the ball part.
    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.n) * self.ball_radius.powi(self.n as i32)
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "profile": self.profile,
            "derived": {
                "ball_center": self.ball_center,
                "ball_radius": self.ball_radius,
                "diameter": self.diameter(),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let c = CuspSpec::build(3, Profile::Power(2.0)).unwrap();
        assert!(c.contains(&[0.5, 0.2, 0.0]));
        assert!(!c.in_cusp(&[0.5, 0.3, 0.0]));
        assert!(!c.in_ball(&[0.5, 0.3, 0.0]));
        let cone = CuspSpec::build(3, Profile::Power(1.0)).unwrap();
        assert!(!cone.in_cusp(&[0.3, 0.3, 0.0]));
        assert!(c.contains(&[2.0, 1.0, 0.0]));
        assert!((c.diameter() - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn table_profiles() {
        let p = Profile::Table {
            t: vec![0.0, 0.5, 1.0],
            psi: vec![0.0, 0.25, 1.0],
        };
        p.validate().unwrap();
        assert!((p.eval(0.25) - 0.125).abs() < 1e-15);
        assert!((p.eval(0.75) - 0.625).abs() < 1e-15);
        let bad = Profile::Table {
            t: vec![0.0, 0.5, 1.0],
            psi: vec![0.0, 0.6, 0.5],
        };
        assert!(bad.validate().is_err());
        let short = Profile::Table {
            t: vec![0.0, 0.5],
            psi: vec![0.0, 1.0],
        };
        assert!(short.validate().is_err());
        assert!(Profile::Power(0.5).validate().is_err());
    }
}
