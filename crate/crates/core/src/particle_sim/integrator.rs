use crate::system::ParticleSystem;

use super::extinction::{frozen_radius, small_radius_limit, time_to_shrink};
use super::{ExtinctionRecord, IntegratorConfig, SimError};

/// Result of one accepted step of size `dt`.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub system: ParticleSystem,
    /// Largest step-doubling error estimate over the sub-steps.
    pub error_estimate: f64,
    /// Particles removed inside the step; `trace` holds samples of the
    /// frozen-field path shortly before each extinction.
    pub extinctions: Vec<ExtinctionRecord>,
}

/// Advances `system` by `dt`.
///
/// `u_bar` is the mean field of `system` (ignored in frozen-field mode). If a
/// small particle reaches the extinction radius inside the step, the step is
/// split there, the particle is removed, and the remainder is re-taken with
/// the reduced system. Returns [`SimError::Rejected`] when the local error or
/// the volume drift of any sub-step exceeds the tolerance.
pub fn step(
    system: &ParticleSystem,
    u_bar: f64,
    dt: f64,
    config: &IntegratorConfig,
) -> Result<StepOutcome, SimError> {
    if !(dt > 0.0) || dt > config.dt_max * (1.0 + 1e-12) {
        return Err(SimError::ContractViolation(format!(
            "dt = {dt} outside (0, dt_max = {}]",
            config.dt_max
        )));
    }
    if system.is_extinct() {
        return Err(SimError::Core(crate::error::CoreError::Extinct));
    }
    let da = system.delta_alpha();
    let mut state = system.clone();
    let mut remaining = dt;
    let mut worst = 0.0f64;
    let mut extinctions = Vec::new();
    let mut first = true;

    while remaining > 0.0 && !state.is_extinct() {
        let u0 = match config.frozen_u_bar {
            Some(u) => u,
            None if first => u_bar,
            None => state.mean_field()?.u_bar,
        };
        first = false;

        let limit = small_radius_limit(u0, config);
        let mut small = Vec::new();
        let mut regular = Vec::new();
        for (i, (&r, &a)) in state.radii.iter().zip(&state.active).enumerate() {
            if a {
                if r <= limit {
                    small.push(i);
                } else {
                    regular.push(i);
                }
            }
        }
        let taus: Vec<f64> = small
            .iter()
            .map(|&i| time_to_shrink(state.radii[i], config.extinction_radius, u0, da).max(0.0))
            .collect();
        let tau_min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
        let h = tau_min.min(remaining);

        let small_radii: Vec<f64> = small.iter().map(|&i| state.radii[i]).collect();
        let (mut new_regular, err) =
            advance_regular(&state, &regular, &small_radii, u0, h, config)?;
        worst = worst.max(err);
        if !(err <= config.tolerance) {
            return Err(SimError::Rejected {
                error: err,
                tolerance: config.tolerance,
            });
        }

        let mut next = state.clone();
        let mut volume_change = 0.0;
        let mut volume_scale = 0.0;
        let event_cut = h * (1.0 + 1e-12);
        let mut dying = Vec::new();
        for (k, &i) in small.iter().enumerate() {
            let r_new = if taus[k] <= event_cut {
                dying.push(k);
                config.extinction_radius.min(state.radii[i])
            } else {
                frozen_radius(state.radii[i], u0, da, h)
            };
            let dv = cube_difference(r_new, state.radii[i]);
            volume_change += dv;
            volume_scale += dv.abs();
            next.radii[i] = r_new;
        }
        if config.frozen_u_bar.is_none() && !small.is_empty() && !regular.is_empty() {
            let old: Vec<f64> = regular.iter().map(|&i| state.radii[i]).collect();
            project_volume(&old, &mut new_regular, -volume_change, da);
        }
        for (&i, &r) in regular.iter().zip(&new_regular) {
            let dv = cube_difference(r, state.radii[i]);
            volume_change += dv;
            volume_scale += dv.abs();
            next.radii[i] = r;
        }
        if config.frozen_u_bar.is_none() && small.len() > dying.len() {
            // surviving small particles saw the start-of-step field; their
            // radius error is about h |u(t + h) - u(t)| / 2
            let mut end = next.radii.clone();
            for &k in &dying {
                end[small[k]] = 0.0;
            }
            for (r, &a) in end.iter_mut().zip(&next.active) {
                if !a {
                    *r = 0.0;
                }
            }
            let u1 = crate::mean_field::mean_field(&end, da)?.u_bar;
            let err_small = 0.5 * h * (u1 - u0).abs();
            worst = worst.max(err_small);
            if !(err_small <= config.tolerance) {
                return Err(SimError::Rejected {
                    error: err_small,
                    tolerance: config.tolerance,
                });
            }
        }
        if config.frozen_u_bar.is_none() {
            // rounding of the stored radii alone moves the volume by ~eps V
            let rounding: f64 =
                next.active_radii().map(|r| r * r * r).sum::<f64>() * 4.0 * f64::EPSILON;
            let allowed = config.tolerance * h + 16.0 * f64::EPSILON * volume_scale + rounding;
            if volume_change.abs() > allowed {
                return Err(SimError::Rejected {
                    error: volume_change.abs() / h.max(f64::MIN_POSITIVE),
                    tolerance: config.tolerance,
                });
            }
        }

        for k in dying {
            let i = small[k];
            let tau = taus[k];
            let trace = (1..=8)
                .filter_map(|j| {
                    let s = tau * (1.0 - 0.5f64.powi(j));
                    let r = frozen_radius(state.radii[i], u0, da, s);
                    (r >= 100.0 * config.extinction_radius).then_some((state.time + s, r))
                })
                .collect();
            let t_ext = state.time + tau;
            next.extinguish(i, t_ext);
            extinctions.push(ExtinctionRecord {
                index: i,
                time: t_ext,
                trace,
            });
        }
        next.time = state.time + h;
        state = next;
        remaining -= h;
        if remaining <= 1e-14 * dt {
            break;
        }
    }
    state.time = system.time + dt;
    if state.is_extinct() {
        // a frozen-field run ends at the last extinction
        if let Some(last) = extinctions.last() {
            state.time = last.time;
        }
    }
    Ok(StepOutcome {
        system: state,
        error_estimate: worst,
        extinctions,
    })
}

/// `a^3 - b^3` without cancellation between two large cubes.
#[inline]
fn cube_difference(a: f64, b: f64) -> f64 {
    (a - b) * (a * a + a * b + b * b)
}

/// Shifts `new` along the mean-field direction `c = 1 / (1 + d R)` so that its
/// volume change relative to `old` equals `target`.
///
/// The small-particle flux has a square-root singularity at extinction, which
/// the stage quadrature resolves only to a few digits; the shift amounts to
/// using the exact time average of the mean field over the step.
fn project_volume(old: &[f64], new: &mut [f64], target: f64, da: f64) {
    let c: Vec<f64> = new.iter().map(|&r| 1.0 / (1.0 + da * r)).collect();
    let mut lambda = 0.0;
    for _ in 0..4 {
        let (mut g, mut dg) = (-target, 0.0);
        for ((&r0, &r), &ci) in old.iter().zip(new.iter()).zip(&c) {
            let x = r + lambda * ci;
            g += cube_difference(x, r0);
            dg += 3.0 * x * x * ci;
        }
        let d = g / dg;
        lambda -= d;
        if d.abs() <= 1e-17 * (1.0 + lambda.abs()) {
            break;
        }
    }
    for (r, &ci) in new.iter_mut().zip(&c) {
        *r += lambda * ci;
    }
}

/// RK4 with step doubling for the particles above the small-radius limit.
///
/// In self-consistent mode the stage mean field is fixed by requiring the
/// total volume rate, including the frozen-path small particles, to vanish:
/// `u = (sum R c - F_small) / sum R^2 c`. Without small particles this is the
/// ordinary mean field.
fn advance_regular(
    state: &ParticleSystem,
    regular: &[usize],
    small_radii: &[f64],
    u0: f64,
    h: f64,
    config: &IntegratorConfig,
) -> Result<(Vec<f64>, f64), SimError> {
    if regular.is_empty() || h == 0.0 {
        return Ok((regular.iter().map(|&i| state.radii[i]).collect(), 0.0));
    }
    let da = state.delta_alpha();
    let frozen = config.frozen_u_bar.is_some();

    // volume flux of the small particles at the stage offsets 0, h/4, ..., h
    let mut flux = [0.0f64; 5];
    if !frozen && !small_radii.is_empty() {
        for (q, f) in flux.iter_mut().enumerate() {
            let s = h * q as f64 / 4.0;
            *f = small_radii
                .iter()
                .map(|&r0| {
                    let r = frozen_radius(r0, u0, da, s);
                    if r > 0.0 {
                        r * r * (u0 - 1.0 / r) / (1.0 + da * r)
                    } else {
                        0.0
                    }
                })
                .sum();
        }
    }

    let rhs = |y: &[f64], f_small: f64, out: &mut [f64]| -> bool {
        let u = if frozen {
            u0
        } else {
            let (mut a, mut b) = (0.0, 0.0);
            for &r in y {
                let w = r / (1.0 + da * r);
                a += w;
                b += w * r;
            }
            (a - f_small) / b
        };
        let mut ok = true;
        for (o, &r) in out.iter_mut().zip(y) {
            ok &= r > 0.0 && r.is_finite();
            *o = (u - 1.0 / r) / (1.0 + da * r);
        }
        ok
    };

    let y0: Vec<f64> = regular.iter().map(|&i| state.radii[i]).collect();
    let full = rk4(&y0, h, [flux[0], flux[2], flux[4]], &rhs);
    let mid = rk4(&y0, 0.5 * h, [flux[0], flux[1], flux[2]], &rhs);
    let half = mid.and_then(|m| rk4(&m, 0.5 * h, [flux[2], flux[3], flux[4]], &rhs));
    let (full, half) = match (full, half) {
        (Some(f), Some(hf)) => (f, hf),
        _ => return Ok((y0, f64::INFINITY)),
    };
    let mut err = 0.0f64;
    let y: Vec<f64> = full
        .iter()
        .zip(&half)
        .map(|(&f, &hf)| {
            let d = (hf - f) / 15.0;
            err = err.max(d.abs());
            hf + d
        })
        .collect();
    if y.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Ok((y0, f64::INFINITY));
    }
    Ok((y, err))
}

/// One classical RK4 step; `flux` holds the small-particle volume flux at
/// the start, midpoint and end of the step. `None` if a stage leaves the
/// domain `R > 0`.
fn rk4(
    y0: &[f64],
    h: f64,
    flux: [f64; 3],
    rhs: &impl Fn(&[f64], f64, &mut [f64]) -> bool,
) -> Option<Vec<f64>> {
    let n = y0.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    if !rhs(y0, flux[0], &mut k1) {
        return None;
    }
    for i in 0..n {
        tmp[i] = y0[i] + 0.5 * h * k1[i];
    }
    if !rhs(&tmp, flux[1], &mut k2) {
        return None;
    }
    for i in 0..n {
        tmp[i] = y0[i] + 0.5 * h * k2[i];
    }
    if !rhs(&tmp, flux[1], &mut k3) {
        return None;
    }
    for i in 0..n {
        tmp[i] = y0[i] + h * k3[i];
    }
    if !rhs(&tmp, flux[2], &mut k4) {
        return None;
    }
    Some(
        (0..n)
            .map(|i| y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect(),
    )
}
