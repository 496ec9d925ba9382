use std::collections::{HashMap, VecDeque};

use crate::system::{diagnostics, Diagnostics, ParticleSystem};

use super::extinction::small_radius_limit;
use super::integrator::step;
use super::{IntegratorConfig, SimError, SolverStats, StepSummary, Trajectory};

/// Snapshot times: every `interval` up to the horizon, plus `extra_times`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSchedule {
    pub interval: f64,
    pub extra_times: Vec<f64>,
}

impl OutputSchedule {
    pub fn every(interval: f64) -> Self {
        Self {
            interval,
            extra_times: Vec::new(),
        }
    }

    /// Sorted output times in `(0, horizon]`, always ending at `horizon`.
    pub fn times(&self, horizon: f64) -> Vec<f64> {
        let mut times = Vec::new();
        if self.interval > 0.0 {
            let n = (horizon / self.interval).floor() as usize;
            times.extend((1..=n).map(|k| k as f64 * self.interval));
        }
        times.extend(
            self.extra_times
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < horizon),
        );
        times.push(horizon);
        times.retain(|&t| t <= horizon);
        times.sort_by(f64::total_cmp);
        let tol = 1e-12 * horizon;
        times.dedup_by(|a, b| (*a - *b).abs() <= tol);
        // the horizon itself wins over a nearly coincident grid point
        if let Some(last) = times.last_mut() {
            *last = horizon;
        }
        times
    }
}

fn snapshot_diagnostics(system: &ParticleSystem, config: &IntegratorConfig) -> Diagnostics {
    match diagnostics(system) {
        Ok(mut d) => {
            if let Some(u) = config.frozen_u_bar {
                d.u_bar = u;
            }
            d
        }
        Err(_) => Diagnostics {
            total_volume: 0.0,
            total_surface: 0.0,
            dissipation: 0.0,
            active_fraction: 0.0,
            u_bar: config.frozen_u_bar.unwrap_or(f64::NAN),
        },
    }
}

fn check_collisions(system: &ParticleSystem, spacing: f64) -> Result<(), SimError> {
    let reach = 2.0 * system.delta_alpha() * system.max_radius();
    if reach >= spacing {
        // locate a pair for the message
        let (i, j) = closest_pair(system);
        return Err(SimError::Collision {
            i,
            j,
            detail: format!("2 delta^alpha sup R = {reach} >= center spacing {spacing}"),
        });
    }
    Ok(())
}

fn closest_pair(system: &ParticleSystem) -> (usize, usize) {
    let c = &system.centers;
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let d = crate::system::distance(&c[i], &c[j]);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    (best.1, best.2)
}

/// Integrates `initial` up to `horizon` (rescaled time), recording a snapshot
/// with diagnostics at every scheduled output time. Rejected steps are retried
/// with half the step size; the run aborts if `dt < 1e-14 horizon`.
pub fn simulate(
    initial: &ParticleSystem,
    horizon: f64,
    config: &IntegratorConfig,
    schedule: &OutputSchedule,
) -> Result<Trajectory, SimError> {
    if !(horizon > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    config.validate(initial.initial_count)?;
    if initial.is_extinct() {
        return Err(SimError::Core(crate::error::CoreError::Extinct));
    }
    let spacing = initial.min_center_spacing();
    check_collisions(initial, spacing)?;

    let mut state = initial.clone();
    state.time = 0.0;
    let initial_volume = state.volume();
    let mut traj = Trajectory {
        times: vec![0.0],
        snapshots: vec![state.clone()],
        diagnostics_series: vec![snapshot_diagnostics(&state, config)],
        extinction_log: Vec::new(),
        step_log: vec![summary(&state, config)],
        initial_volume,
        config: *config,
        stats: SolverStats::default(),
    };

    let outputs = schedule.times(horizon);
    let mut next_out = 0;
    let mut dt = config.dt_max.min(horizon / 100.0);
    let mut traces: HashMap<usize, VecDeque<(f64, f64)>> = HashMap::new();

    while next_out < outputs.len() && !state.is_extinct() {
        let target = outputs[next_out];
        let truncated = dt >= target - state.time;
        let h = if truncated { target - state.time } else { dt };
        let u = match config.frozen_u_bar {
            Some(u) => u,
            None => state.mean_field()?.u_bar,
        };
        match step(&state, u, h, config) {
            Ok(out) => {
                traj.stats.accepted += 1;
                for mut ev in out.extinctions {
                    let mut trace: Vec<(f64, f64)> =
                        traces.remove(&ev.index).map(Vec::from).unwrap_or_default();
                    trace.extend(ev.trace.iter().copied());
                    let keep = trace.len().saturating_sub(config.trace_len);
                    ev.trace = trace.split_off(keep);
                    traj.extinction_log.push(ev);
                }
                state = out.system;
                if truncated && !state.is_extinct() {
                    state.time = target;
                }
                record_small_samples(&state, config, &mut traces);
                traj.step_log.push(summary(&state, config));
                check_collisions(&state, spacing)?;

                if state.time >= target * (1.0 - 1e-14) || state.is_extinct() {
                    traj.times.push(state.time);
                    traj.diagnostics_series
                        .push(snapshot_diagnostics(&state, config));
                    traj.snapshots.push(state.clone());
                    next_out += 1;
                }

                let factor = if out.error_estimate > 0.0 {
                    (0.9 * (config.tolerance / out.error_estimate).powf(0.2)).clamp(0.2, 4.0)
                } else {
                    4.0
                };
                let base = if truncated { dt.max(h) } else { h };
                dt = (base * factor).min(config.dt_max);
            }
            Err(SimError::Rejected { .. }) => {
                traj.stats.rejected += 1;
                dt = 0.5 * h;
                if dt < 1e-14 * horizon {
                    return Err(SimError::StepUnderflow {
                        dt,
                        time: state.time,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

fn summary(state: &ParticleSystem, config: &IntegratorConfig) -> StepSummary {
    let u_bar = config
        .frozen_u_bar
        .or_else(|| state.mean_field().ok().map(|m| m.u_bar))
        .unwrap_or(f64::NAN);
    StepSummary {
        time: state.time,
        volume: state.volume(),
        surface: state.surface(),
        active_count: state.active_count(),
        u_bar,
    }
}

fn record_small_samples(
    state: &ParticleSystem,
    config: &IntegratorConfig,
    traces: &mut HashMap<usize, VecDeque<(f64, f64)>>,
) {
    let u = match config.frozen_u_bar {
        Some(u) => u,
        None => match state.mean_field() {
            Ok(m) => m.u_bar,
            Err(_) => return,
        },
    };
    let limit = small_radius_limit(u, config);
    let floor = 100.0 * config.extinction_radius;
    for (i, (&r, &a)) in state.radii.iter().zip(&state.active).enumerate() {
        if a && r <= limit && r >= floor {
            let buf = traces.entry(i).or_default();
            if buf.len() == config.trace_len {
                buf.pop_front();
            }
            buf.push_back((state.time, r));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::ScaleParameters;

    #[test]
    fn schedule_includes_horizon_and_extras() {
        let s = OutputSchedule {
            interval: 0.1,
            extra_times: vec![0.25, 0.3, 2.0],
        };
        let t = s.times(0.35);
        assert_eq!(t.len(), 5);
        assert!((t[0] - 0.1).abs() < 1e-15);
        assert!((t[2] - 0.25).abs() < 1e-15);
        assert_eq!(*t.last().unwrap(), 0.35);
        let t = OutputSchedule::every(0.1).times(0.3);
        assert_eq!(t.len(), 3);
        assert_eq!(t[2], 0.3);
    }

    #[test]
    fn monodisperse_run_is_stationary() {
        let s = ScaleParameters::new(0.2, 2.0, 0.01).unwrap();
        let sys = ParticleSystem::unplaced(s, vec![1.0; 5]).unwrap();
        let traj = simulate(
            &sys,
            10.0,
            &IntegratorConfig {
                dt_max: 0.5,
                ..Default::default()
            },
            &OutputSchedule::every(1.0),
        )
        .unwrap();
        assert_eq!(traj.times.len(), 11);
        for snap in &traj.snapshots {
            assert!(snap.radii.iter().all(|r| (*r - 1.0).abs() < 1e-15));
        }
        for d in &traj.diagnostics_series {
            assert_eq!(d.active_fraction, 1.0);
        }
    }

    #[test]
    fn collision_is_detected() {
        let s = ScaleParameters::new(0.5, 2.0, 0.01).unwrap();
        let sys = ParticleSystem::new(s, vec![1.0, 1.0], vec![[0.0; 3], [0.4, 0.0, 0.0]]).unwrap();
        let err = simulate(
            &sys,
            1.0,
            &IntegratorConfig::default(),
            &OutputSchedule::every(0.5),
        );
        assert!(matches!(err, Err(SimError::Collision { .. })));
    }
}
