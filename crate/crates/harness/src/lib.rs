//! Experiment runner around `lsw-core`: TOML run configurations, CSV output
//! with provenance headers, single runs and convergence sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv;
pub mod error;
pub mod runs;
pub mod stats;
pub mod sweep;

pub use config::RunConfig;
pub use error::HarnessError;
pub use runs::{compare, field_survey, run_particles, run_pde};
pub use sweep::run_convergence_sweep;
