//! Time integration of the nonlocal N-particle system under the mean-field
//! closure, with extinction events.
//!
//! Particles above the small-radius limit are advanced together by classical
//! RK4 with step-doubling error control; the mean field is re-evaluated at
//! every stage. Particles below `min(freeze_threshold, 1/(4 u_bar))` move
//! along the separable frozen-field path, which also locates their extinction
//! time exactly (see [`extinction`]).

pub mod extinction;
mod integrator;
mod monitor;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::CoreError;
use crate::system::{Diagnostics, ParticleSystem};

pub use extinction::{detect_extinction, frozen_radius, small_radius_limit, time_to_shrink};
pub use integrator::{step, StepOutcome};
pub use monitor::{
    check_extinction_envelopes, check_surface_monotone, check_volume_budget, growth_law_deviation,
    uniform_bound_monitor, EnvelopeReport, InvariantCheck, UniformBoundReport,
};
pub use simulate::{simulate, OutputSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("step rejected: error estimate {error:e} exceeds tolerance {tolerance:e}")]
    Rejected { error: f64, tolerance: f64 },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("time step underflow: dt = {dt:e} at t = {time}")]
    StepUnderflow { dt: f64, time: f64 },
    #[error("particles {i} and {j} may collide: {detail}")]
    Collision { i: usize, j: usize, detail: String },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt_max: f64,
    /// Local radius error target per step; also the volume drift allowed per
    /// unit of rescaled time.
    pub tolerance: f64,
    pub extinction_radius: f64,
    pub freeze_threshold: f64,
    /// Replace the self-consistent mean field by a constant (test mode).
    pub frozen_u_bar: Option<f64>,
    /// Number of pre-extinction samples kept per particle.
    pub trace_len: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_max: 0.01,
            tolerance: 1e-9,
            extinction_radius: 1e-6,
            freeze_threshold: 0.25,
            frozen_u_bar: None,
            trace_len: 12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self, initial_count: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if !(self.extinction_radius > 0.0 && self.extinction_radius < self.freeze_threshold) {
            return bad(format!(
                "need 0 < extinction_radius ({}) < freeze_threshold ({})",
                self.extinction_radius, self.freeze_threshold
            ));
        }
        let loss = self.extinction_radius.powi(3) * initial_count as f64;
        if loss > self.tolerance {
            return bad(format!(
                "extinction volume budget {loss:e} exceeds tolerance {:e}",
                self.tolerance
            ));
        }
        Ok(())
    }
}

/// Extinction event with the last sampled `(time, radius)` pairs before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionRecord {
    pub index: usize,
    pub time: f64,
    pub trace: Vec<(f64, f64)>,
}

/// Aggregates after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub time: f64,
    pub volume: f64,
    pub surface: f64,
    pub active_count: usize,
    pub u_bar: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ParticleSystem>,
    pub diagnostics_series: Vec<Diagnostics>,
    pub extinction_log: Vec<ExtinctionRecord>,
    pub step_log: Vec<StepSummary>,
    pub initial_volume: f64,
    pub config: IntegratorConfig,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn last(&self) -> &ParticleSystem {
        self.snapshots
            .last()
            .expect("trajectory has at least one snapshot")
    }

    /// Snapshot index whose time equals `t` up to rounding.
    pub fn snapshot_at(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}
