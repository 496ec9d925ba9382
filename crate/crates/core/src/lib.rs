//! Reaction-controlled Ostwald ripening in the mean-field regime.
//!
//! * [`scale`], [`mean_field`], [`system`]: scaling exponents, the closed-form
//!   mean field and growth law, particle state and its aggregates.
//! * [`particle_sim`]: integration of the N-particle ODE system with
//!   extinction events.
//! * [`monopole`]: the monopole approximation of the chemical potential over
//!   lattice-placed particles and its defect measurements.
//! * [`lsw_pde`]: finite-volume solver for the limiting transport equation.
//! * [`measures`]: empirical measures, Wasserstein distance and the weak-form
//!   residual of the limit equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lsw_pde;
pub mod mean_field;
pub mod measures;
pub mod monopole;
pub mod particle_sim;
pub mod quadrature;
pub mod sampling;
pub mod scale;
pub mod system;

pub use error::CoreError;
pub use mean_field::{growth_rate, lsw_velocity, mean_field, MeanFieldState};
pub use scale::{derive_gamma, ScaleParameters, DEFAULT_EPSILON};
pub use system::{diagnostics, Diagnostics, ParticleSystem, Point3};
