//! Motion of a small particle under a frozen mean field.
//!
//! For `u R < 1` the growth law `dR/dt = (u - 1/R) / (1 + d R)` is separable:
//! the time to shrink from `R1` to `R2 < R1` is
//!
//! ```text
//! T(R1 -> R2) = integral_{R2}^{R1} R (1 + d R) / (1 - u R) dR
//! ```
//!
//! The integrand is analytic on `[0, R1]` with its pole at `1/u >= 4 R1`, so
//! a single 16-point Gauss-Legendre panel is exact to rounding.

use crate::quadrature::integrate16;

use super::{IntegratorConfig, SimError};

/// Time for a particle to shrink from `from` to `to` (`0 <= to <= from`)
/// under frozen mean field `u_bar`.
pub fn time_to_shrink(from: f64, to: f64, u_bar: f64, delta_alpha: f64) -> f64 {
    debug_assert!(to <= from);
    if to >= from {
        return 0.0;
    }
    integrate16(
        |r| r * (1.0 + delta_alpha * r) / (1.0 - u_bar * r),
        to,
        from,
    )
}

/// Radius after time `elapsed` starting from `radius`, zero if the particle
/// vanishes within `elapsed`.
///
/// Solves `T(radius -> R) = elapsed` by safeguarded Newton iteration in
/// `w = R^2`, where `dT/dw = -(1 + d sqrt w) / (2 (1 - u sqrt w))` stays
/// bounded away from zero as `R -> 0`.
pub fn frozen_radius(radius: f64, u_bar: f64, delta_alpha: f64, elapsed: f64) -> f64 {
    if elapsed <= 0.0 {
        return radius;
    }
    let total = time_to_shrink(radius, 0.0, u_bar, delta_alpha);
    if elapsed >= total {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, radius * radius);
    // initial guess from the drag-free, field-free law R^2 = R0^2 - 2 t
    let mut w = (radius * radius - 2.0 * elapsed).clamp(0.0, radius * radius);
    for _ in 0..60 {
        let r = w.sqrt();
        let g = time_to_shrink(radius, r, u_bar, delta_alpha) - elapsed;
        if g > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let dg = -(1.0 + delta_alpha * r) / (2.0 * (1.0 - u_bar * r));
        let mut next = w - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 1e-16 * radius * radius {
            w = next;
            break;
        }
        w = next;
    }
    w.sqrt()
}

/// Radius bound under which a particle counts as small: below
/// `freeze_threshold` and below `1 / (4 u_bar)`.
pub fn small_radius_limit(u_bar: f64, config: &IntegratorConfig) -> f64 {
    if u_bar > 0.0 {
        config.freeze_threshold.min(0.25 / u_bar)
    } else {
        config.freeze_threshold
    }
}

/// Offset within `(0, dt]` at which a small particle reaches the extinction
/// radius under the frozen field, or `None` if it survives the step.
pub fn detect_extinction(
    radius: f64,
    u_bar: f64,
    delta_alpha: f64,
    dt: f64,
    config: &IntegratorConfig,
) -> Result<Option<f64>, SimError> {
    if !(radius > 0.0) {
        return Err(SimError::ContractViolation(format!(
            "extinction query for non-positive radius {radius}"
        )));
    }
    if radius > config.freeze_threshold {
        return Err(SimError::ContractViolation(format!(
            "radius {radius} above freeze threshold {}",
            config.freeze_threshold
        )));
    }
    if u_bar > 0.0 && radius > 0.25 / u_bar {
        return Err(SimError::ContractViolation(format!(
            "radius {radius} above 1/(4 u_bar) = {}",
            0.25 / u_bar
        )));
    }
    let tau = time_to_shrink(radius, config.extinction_radius, u_bar, delta_alpha);
    Ok((tau <= dt).then_some(tau.max(0.0)))
}
