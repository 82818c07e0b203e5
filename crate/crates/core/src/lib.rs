//! Autonomy-depletion laboratory.
//!
//! A user's sense of control `A` evolves as a geometric Brownian motion whose drift falls
//! with the amount of information `I` an assistant provides; the user disengages when `A`
//! reaches a working-memory dependent boundary. The crate provides
//!
//! * [`model`]: closed forms (drift, moments, hitting times, reward),
//! * [`sim`]: seeded path and ensemble simulation under any control rule,
//! * [`hjb`]: the optimal information-provision policy by backward induction,
//! * [`policy`]: policy definitions and the three-arm comparison,
//! * [`validation`]: the statistical prediction checks and table reproductions.

pub mod artifact;
pub mod error;
pub mod hjb;
pub mod model;
pub mod params;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use hjb::{solve_hjb, GridSpec, HjbSolution};
pub use model::{DriftValue, HittingTime, Regime};
pub use params::{ModelParams, DEFAULT_PRESET};
pub use policy::{Policy, PolicyKind, PolicyReport};
pub use sim::{EnsembleStats, Path, SimConfig};
pub use validation::ValidationReport;
