//! JSON configuration: domain, quadrature, experiment and output blocks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{smooth_family, FieldDescriptor};
use crate::geometry::{CombSpec, CuspSpec, Domain, MushroomSpec, Profile};
use crate::norms::QuadratureSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainConfig {
    Mushroom {
        n: usize,
        p: f64,
        q: f64,
        m: usize,
        /// Head centres in the base square; the diagonal placement when null.
        centers: Option<Vec<Vec<f64>>>,
    },
    Comb {
        n: usize,
        kmax: usize,
        aspect_shrink: bool,
        p: f64,
        q: f64,
    },
    Cusp {
        n: usize,
        profile: Profile,
    },
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Mushroom {
            n: 3,
            p: 5.0,
            q: 1.0,
            m: 12,
            centers: None,
        }
    }
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        Ok(match self {
            DomainConfig::Mushroom { n, p, q, m, centers } => match centers {
                None => Domain::Mushroom(MushroomSpec::build(*n, *p, *q, *m)?),
                Some(c) => {
                    if c.len() != *m {
                        return Err(Error::Config(format!("{} centres given for m = {m}", c.len())));
                    }
                    Domain::Mushroom(MushroomSpec::with_centers(*n, *p, *q, c.clone())?)
                }
            },
            DomainConfig::Comb {
                n, kmax, aspect_shrink, ..
            } => Domain::Comb(CombSpec::build(*n, *kmax, *aspect_shrink)?),
            DomainConfig::Cusp { n, profile } => Domain::Cusp(CuspSpec::build(*n, profile.clone())?),
        })
    }

    /// Exponents `(p, q)` of the mushroom or comb block.
    pub fn exponents(&self) -> Option<(f64, f64)> {
        match self {
            DomainConfig::Mushroom { p, q, .. } | DomainConfig::Comb { p, q, .. } => Some((*p, *q)),
            DomainConfig::Cusp { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of `homog`, `opnorm`, `rate6`, `rate7`.
    pub name: String,
    /// Field family of the operator-norm sweep.
    pub fields: Vec<String>,
    pub mlist: Vec<usize>,
    pub kmax: usize,
    /// Inclusive `k` window of the slope fits; `[3, kmax-1]` when null.
    pub fit_window: Option<[usize; 2]>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "opnorm".into(),
            fields: smooth_family().iter().map(|f| f.to_string()).collect(),
            mlist: vec![8, 12],
            kmax: 11,
            fit_window: None,
        }
    }
}

impl ExperimentConfig {
    pub fn family(&self) -> Result<Vec<FieldDescriptor>> {
        self.fields.iter().map(|s| s.parse()).collect()
    }

    pub fn window(&self) -> Option<(usize, usize)> {
        self.fit_window.map(|[a, b]| (a, b))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<String>,
    pub csv: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.quadrature.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Pretty JSON with every field spelled out, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let a = Config::default().to_json();
        let b = Config::from_json(&a).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_json(
            r#"{"domain": {"type": "mushroom", "n": 3, "p": 5.0, "q": 1.0, "m": 2, "centers": null, "extra": 1}}"#
        )
        .is_err());
        assert!(Config::from_json(r#"{"quadrature": {"nodes": 3}}"#).is_err());
        assert!(Config::from_json(r#"{"bogus": {}}"#).is_err());
        assert!(Config::from_json(r#"{"domain": {"type": "cusp", "n": 3, "profile": {"power": 2.0}}}"#).is_ok());
    }

    #[test]
    fn every_domain_round_trips() {
        for d in [
            DomainConfig::default(),
            DomainConfig::Comb {
                n: 3,
                kmax: 11,
                aspect_shrink: false,
                p: 1.5,
                q: 1.0,
            },
            DomainConfig::Cusp {
                n: 3,
                profile: Profile::Table {
                    t: vec![0.0, 0.5, 1.0],
                    psi: vec![0.0, 0.25, 1.0],
                },
            },
        ] {
            let c = Config {
                domain: d,
                ..Config::default()
            };
            let j = c.to_json();
            assert_eq!(Config::from_json(&j).unwrap(), c);
            assert_eq!(Config::from_json(&j).unwrap().to_json(), j);
            c.domain.build().unwrap();
        }
    }
}
