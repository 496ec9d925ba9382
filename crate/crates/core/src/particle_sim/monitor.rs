//! Invariant monitors evaluated on finished trajectories.

use crate::mean_field::{lsw_velocity, rate};

use super::Trajectory;

/// Outcome of one invariant check; `worst` is the largest violation ratio
/// (measured / allowed), so `passed` iff `worst <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub detail: String,
}

/// `|V(t) - V(0)| <= N_extinct(t) r_ext^3 + t tol` after every accepted step.
pub fn check_volume_budget(traj: &Trajectory) -> InvariantCheck {
    let cfg = &traj.config;
    let v0 = traj.initial_volume;
    let n0 = traj.step_log.first().map(|s| s.active_count).unwrap_or(0);
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for s in &traj.step_log {
        let extinct = n0 - s.active_count;
        let allowed = extinct as f64 * cfg.extinction_radius.powi(3) + s.time * cfg.tolerance;
        let drift = (s.volume - v0).abs();
        // rounding floor of summing N cubes
        let floor = 4.0 * f64::EPSILON * v0 * (n0 as f64).sqrt();
        let ratio = drift / (allowed + floor);
        if ratio > worst {
            worst = ratio;
            at = s.time;
        }
    }
    InvariantCheck {
        name: "volume_budget",
        passed: worst <= 1.0,
        worst,
        detail: format!("worst drift/budget ratio {worst:.3e} at t = {at}"),
    }
}

/// Total surface nonincreasing across accepted steps, with `1e-12` relative slack.
pub fn check_surface_monotone(traj: &Trajectory) -> InvariantCheck {
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for w in traj.step_log.windows(2) {
        let slack = 1e-12 * w[0].surface;
        let increase = w[1].surface - w[0].surface;
        let ratio = if increase > 0.0 {
            increase / slack
        } else {
            0.0
        };
        if ratio > worst {
            worst = ratio;
            at = w[1].time;
        }
    }
    InvariantCheck {
        name: "surface_monotone",
        passed: worst <= 1.0,
        worst,
        detail: format!("worst surface increase / slack {worst:.3e} at t = {at}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub extinctions: usize,
    pub samples_checked: usize,
    pub violations: usize,
    /// Largest sampled radius admitted to the check, `1 / (4 max u_bar)`.
    pub radius_cap: f64,
    /// Extremes of `R / sqrt(t_i - t)` over checked samples; must lie in `[1, 2]`.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `sqrt(t_i - t) <= R <= 2 sqrt(t_i - t)` for every logged pre-extinction
/// sample with `R <= 1 / (4 max u_bar)`.
pub fn check_extinction_envelopes(traj: &Trajectory) -> EnvelopeReport {
    let max_u = traj
        .step_log
        .iter()
        .map(|s| s.u_bar)
        .filter(|u| u.is_finite())
        .fold(0.0, f64::max);
    let cap = if max_u > 0.0 {
        0.25 / max_u
    } else {
        f64::INFINITY
    };
    let mut report = EnvelopeReport {
        extinctions: traj.extinction_log.len(),
        samples_checked: 0,
        violations: 0,
        radius_cap: cap,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
    };
    for ev in &traj.extinction_log {
        for &(t, r) in &ev.trace {
            if r > cap || t >= ev.time {
                continue;
            }
            let s = (ev.time - t).sqrt();
            let ratio = r / s;
            report.samples_checked += 1;
            report.min_ratio = report.min_ratio.min(ratio);
            report.max_ratio = report.max_ratio.max(ratio);
            if !(s <= r && r <= 2.0 * s) {
                report.violations += 1;
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBoundReport {
    pub max_u_bar: f64,
    pub max_radius: f64,
    pub initial_u_bar: f64,
    pub initial_max_radius: f64,
    pub factor: f64,
    pub violated: bool,
}

/// Largest mean field and radius over the snapshots, flagged if either
/// exceeds `factor` times its initial value.
pub fn uniform_bound_monitor(traj: &Trajectory, factor: f64) -> UniformBoundReport {
    let finite_u = |u: f64| if u.is_finite() { u } else { 0.0 };
    let initial_u_bar = finite_u(traj.diagnostics_series[0].u_bar);
    let initial_max_radius = traj.snapshots[0].max_radius();
    let max_u_bar = traj
        .diagnostics_series
        .iter()
        .map(|d| finite_u(d.u_bar))
        .fold(0.0, f64::max);
    let max_radius = traj
        .snapshots
        .iter()
        .map(|s| s.max_radius())
        .fold(0.0, f64::max);
    UniformBoundReport {
        max_u_bar,
        max_radius,
        initial_u_bar,
        initial_max_radius,
        factor,
        violated: max_u_bar > factor * initial_u_bar || max_radius > factor * initial_max_radius,
    }
}

/// `max |dR/dt - (u_bar - 1/R)|` over snapshots and active particles: the
/// deviation of the finite-`delta` growth law from the limiting one.
pub fn growth_law_deviation(traj: &Trajectory) -> f64 {
    let mut worst = 0.0f64;
    for (snap, diag) in traj.snapshots.iter().zip(&traj.diagnostics_series) {
        let da = snap.delta_alpha();
        let u = diag.u_bar;
        if !u.is_finite() {
            continue;
        }
        for r in snap.active_radii() {
            worst = worst.max((rate(r, u, da) - lsw_velocity(r, u)).abs());
        }
    }
    worst
}
