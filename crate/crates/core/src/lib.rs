//! Optimistic online convex optimization against stochastically extended
//! adversaries.
//!
//! The crate provides exact feasible-set geometry ([`geometry`]), loss
//! families with closed-form mean gradients and variances ([`losses`]),
//! adaptive environments ([`environments`]), the optimistic learners
//! ([`learners`]), regret and bound evaluators ([`metrics`]), and a seeded,
//! parallel experiment harness ([`harness`]) driven by TOML configs
//! ([`config`]). [`verify`] bundles the acceptance checks run by
//! `sea-oco verify`.

pub mod cli;
pub mod config;
pub mod environments;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::FeasibleSet;
pub use linalg::{Point, SymMatrix};
