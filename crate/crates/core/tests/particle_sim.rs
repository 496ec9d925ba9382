#![allow(clippy::excessive_precision)]
use approx::assert_relative_eq;
use lsw_core::particle_sim::{
    check_extinction_envelopes, check_surface_monotone, check_volume_budget, simulate,
    IntegratorConfig, OutputSchedule,
};
use lsw_core::{ParticleSystem, ScaleParameters};

fn two_particles() -> ParticleSystem {
    ParticleSystem::unplaced(ScaleParameters::limit(2.0).unwrap(), vec![1.0, 2.0]).unwrap()
}

// Reference values below come from an arbitrary-precision ODE solve of the
// two-particle system with u = (R1 + R2) / (R1^2 + R2^2).

#[test]
fn two_particle_radii_match_reference() {
    let cfg = IntegratorConfig {
        tolerance: 1e-12,
        ..Default::default()
    };
    let traj = simulate(&two_particles(), 0.1, &cfg, &OutputSchedule::every(0.05)).unwrap();
    let last = traj.last();
    assert_relative_eq!(last.radii[0], 0.957802922493337893692, max_relative = 1e-10);
    assert_relative_eq!(last.radii[1], 2.01005969875452752582, max_relative = 1e-10);
    assert_relative_eq!(last.volume(), 9.0, max_relative = 1e-12);
}

#[test]
fn two_particle_extinction_time_and_survivor() {
    let cfg = IntegratorConfig::default();
    let traj = simulate(&two_particles(), 1.0, &cfg, &OutputSchedule::every(0.1)).unwrap();
    assert_eq!(traj.extinction_log.len(), 1);
    let ev = &traj.extinction_log[0];
    assert_eq!(ev.index, 0);
    assert!(
        (ev.time - 0.866750800136170034420).abs() <= 1e-6,
        "t = {}",
        ev.time
    );
    let last = traj.last();
    assert_eq!(last.active_count(), 1);
    assert_relative_eq!(last.radii[1], 9f64.cbrt(), max_relative = 1e-8);
    assert!(check_volume_budget(&traj).passed);
    assert!(check_surface_monotone(&traj).passed);
    let env = check_extinction_envelopes(&traj);
    assert!(env.samples_checked > 0);
    assert!(env.passed(), "{env:?}");
}

#[test]
fn single_particle_in_zero_field_vanishes_at_half_square() {
    for r0 in [0.1, 0.5, 1.0] {
        let cfg = IntegratorConfig {
            frozen_u_bar: Some(0.0),
            extinction_radius: 1e-9,
            ..Default::default()
        };
        let sys = ParticleSystem::unplaced(ScaleParameters::limit(2.0).unwrap(), vec![r0]).unwrap();
        let traj = simulate(&sys, 1.0, &cfg, &OutputSchedule::every(0.25)).unwrap();
        assert_eq!(traj.extinction_log.len(), 1);
        assert!((traj.extinction_log[0].time - r0 * r0 / 2.0).abs() <= 1e-8);
    }
}

#[test]
fn runs_are_deterministic() {
    let s = ScaleParameters::new(0.1, 2.0, 0.01).unwrap();
    let radii: Vec<f64> = (0..50).map(|i| 0.5 + (i as f64 * 0.37).fract()).collect();
    let sys = ParticleSystem::unplaced(s, radii).unwrap();
    let cfg = IntegratorConfig::default();
    let a = simulate(&sys, 0.5, &cfg, &OutputSchedule::every(0.1)).unwrap();
    let b = simulate(&sys, 0.5, &cfg, &OutputSchedule::every(0.1)).unwrap();
    assert_eq!(a.last().radii, b.last().radii);
    assert_eq!(a.extinction_log, b.extinction_log);
}
