//! Numerical laboratory for Sobolev extension on mushroom-type domains.
//!
//! The crate builds the domains as membership oracles, evaluates the
//! cut-offs, reflections and the piecewise extension operator, integrates
//! norms over regions whose radii run far below `f64` resolution, and
//! drives the rate experiments behind the `sobexlab` binary.

// Parameter checks are written `!(x > a)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod cutoffs;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod field;
pub mod fields;
pub mod geometry;
pub mod logspace;
pub mod maps;
pub mod norms;
pub mod rng;

pub use error::{Error, Result};
