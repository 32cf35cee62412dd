//! Simulation front end for rotatable-antenna cell-free downlink studies:
//! configuration files, seeded drops, parameter sweeps, JSON run reports,
//! CSV output and invariant suites.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;
pub mod validate;

pub use config::{AlgorithmConfig, RunConfig};
pub use error::SimError;
