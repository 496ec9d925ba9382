//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::time::{Duration, Instant};

use lsw_core::lsw_pde::{solve, Closure, InitialProfile, KineticRegime, PdeConfig, RadiusGrid};
use lsw_core::measures::{transport_cost, wasserstein1, EmpiricalMeasure};
use lsw_core::particle_sim::{simulate, IntegratorConfig, OutputSchedule};
use lsw_core::quadrature::integrate16;
use lsw_core::{growth_rate, mean_field, ParticleSystem, ScaleParameters};
use lsw_harness::runs::{field_survey, run_particles};
use lsw_harness::sweep::run_convergence_sweep;
use lsw_harness::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn closure_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_volume, mut worst_dissipation, mut worst_energy) =
        (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut worst_energy_abs = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..=64);
        let da = [0.0, 0.01, 0.1][case % 3];
        let radii: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..=10.0)).collect();
        let u = mean_field(&radii, da).unwrap().u_bar;
        let (mut volume, mut volume_scale, mut dissipation, mut energy, mut energy_scale) =
            (0.0, 0.0, 0.0, 0.0, 0.0);
        for &r in &radii {
            let v = growth_rate(r, u, da).unwrap();
            volume += r * r * v;
            volume_scale += r * (u * r + 1.0) / (1.0 + da * r);
            dissipation += r * v;
            energy += r * v + r * r * v * v;
            energy_scale += (r * v).abs() + r * r * v * v + u * u * r * r;
        }
        worst_volume = worst_volume.max(volume.abs() / volume_scale);
        worst_dissipation = worst_dissipation.max(dissipation);
        if da == 0.0 {
            worst_energy = worst_energy.max(energy.abs() / energy_scale);
            worst_energy_abs = worst_energy_abs.max(energy.abs());
        }
    }
    outcome(
        worst_volume <= 1e-12 && worst_dissipation <= 1e-14 && worst_energy_abs <= 1e-12,
        format!(
            "volume rate {worst_volume:.1e} rel, max sum R dR/dt {worst_dissipation:.1e}, energy identity {worst_energy:.1e} rel ({worst_energy_abs:.1e} abs)"
        ),
    )
}

const CONSERVATION_RUN: &str = r#"
horizon = 0.7
[scale]
delta = 0.1
alpha = 2.0
zero_drag = true
[initial]
seed = 1
[initial.radii]
kind = "uniform"
low = 0.5
high = 1.5
[output]
profiles = false
"#;

fn conservation_and_envelope() -> (Outcome, Outcome) {
    let cfg = RunConfig::from_toml(CONSERVATION_RUN).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_particles(&cfg, dir.path()).unwrap();
    let traj = &report.trajectory;
    let n = traj.snapshots[0].len();
    let extinct = traj.extinction_log.len() as f64 / n as f64;
    let volume = &report.checks[0];
    let surface = &report.checks[1];
    let c2 = outcome(
        n == 1000 && (0.25..=0.35).contains(&extinct) && volume.passed && surface.passed,
        format!(
            "N = {n}, {:.1}% extinct, drift/budget {:.2}, surface increase/slack {:.1e}",
            100.0 * extinct,
            volume.worst,
            surface.worst
        ),
    );

    let env = &report.envelope;
    let mut worst_oracle = 0.0f64;
    for r0 in [0.05, 0.3, 0.7, 1.0, 1.9] {
        let cfg = IntegratorConfig {
            frozen_u_bar: Some(0.0),
            extinction_radius: 1e-9,
            ..Default::default()
        };
        let sys = ParticleSystem::unplaced(ScaleParameters::limit(2.0).unwrap(), vec![r0]).unwrap();
        let traj = simulate(&sys, 2.0, &cfg, &OutputSchedule::every(0.5)).unwrap();
        let t = traj
            .extinction_log
            .first()
            .map_or(f64::INFINITY, |e| e.time);
        worst_oracle = worst_oracle.max((t - r0 * r0 / 2.0).abs());
    }
    let c3 = outcome(
        env.passed() && env.samples_checked > 0 && worst_oracle <= 1e-8,
        format!(
            "{} extinctions, {} samples below R = {:.3}, ratios in [{:.4}, {:.4}], frozen-field oracle error {worst_oracle:.1e}",
            env.extinctions, env.samples_checked, env.radius_cap, env.min_ratio, env.max_ratio
        ),
    );
    (c2, c3)
}

fn survey_config(alpha: f64, mean: f64, amplitude: f64, diagnostics_only: bool) -> RunConfig {
    RunConfig::from_toml(&format!(
        r#"
horizon = 1.0
[scale]
delta = 0.05
alpha = {alpha:?}
diagnostics_only = {diagnostics_only}
[initial]
[initial.radii]
kind = "profile"
mean = {mean:?}
amplitude = {amplitude:?}
[survey]
samples = 10000
seed = 5
defect_particles = 2000
[sweep]
deltas = [0.2, 0.1, 0.05]
"#
    ))
    .unwrap()
}

fn monopole_rates() -> Outcome {
    let cfg = survey_config(2.0, 1.0, 0.5, false);
    let dir = tempfile::tempdir().unwrap();
    let report = field_survey(&cfg, dir.path()).unwrap();
    let gamma = report.rows[0].gamma;
    let defect_exponent = 2.0 * cfg.scale.alpha - 3.0;
    let dev = report.deviation_slope.unwrap().slope;
    let defect = report.defect_slope.unwrap().slope;
    outcome(
        dev >= gamma - 0.3 && defect >= defect_exponent - 0.3,
        format!(
            "max |zeta - u| slope {dev:.3} (need {:.2}), boundary defect slope {defect:.3} (need {:.2})",
            gamma - 0.3,
            defect_exponent - 0.3
        ),
    )
}

fn characteristics_error(cells: usize, t: f64) -> f64 {
    let profile = InitialProfile::Bump {
        low: 1.0,
        high: 2.0,
    };
    let grid = RadiusGrid::new(0.1, 2.5, cells).unwrap();
    let initial = profile.discretize(&grid).unwrap();
    let cfg = PdeConfig {
        closure: Closure::Frozen(0.0),
        ..Default::default()
    };
    let traj = solve(&initial, KineticRegime::Reaction, t, &[], &cfg).unwrap();
    let norm = integrate16(|r| profile.shape(r), 1.0, 2.0);
    let exact = |r: f64| {
        let s = (r * r + 2.0 * t).sqrt();
        profile.shape(s) * r / s / norm
    };
    let dr = grid.dr();
    grid.edges
        .windows(2)
        .zip(&traj.last().values)
        .map(|(w, v)| (v - integrate16(exact, w[0], w[1]) / dr).abs() * dr)
        .sum()
}

fn third_moment_drift(cells: usize) -> f64 {
    let grid = RadiusGrid::new(3e-3, 3.0, cells).unwrap();
    let initial = InitialProfile::Bump {
        low: 0.5,
        high: 1.5,
    }
    .discretize(&grid)
    .unwrap();
    solve(
        &initial,
        KineticRegime::Reaction,
        1.0,
        &[],
        &PdeConfig::default(),
    )
    .unwrap()
    .third_moment_drift()
}

fn pde_order() -> Outcome {
    let l1 = characteristics_error(100, 0.3) / characteristics_error(200, 0.3);
    let drift = third_moment_drift(400) / third_moment_drift(200);
    outcome(
        l1 >= 1.7 && (0.35..=0.65).contains(&drift),
        format!("characteristics L1 ratio {l1:.3}, third-moment drift ratio {drift:.3}"),
    )
}

const SWEEP: &str = r#"
horizon = 0.5
[scale]
delta = 0.05
alpha = 2.0
[initial]
seed = 7
[initial.radii]
kind = "uniform"
low = 0.5
high = 1.5
[output]
cadence = 0.005
profiles = false
[pde]
r_max = 3.0
cells = 600
[sweep]
deltas = [0.2, 0.1, 0.05]
checkpoints = [0.125, 0.25, 0.5]
"#;

fn homogenization() -> Outcome {
    let cfg = RunConfig::from_toml(SWEEP).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_convergence_sweep(&cfg, dir.path()).unwrap();
    let counts: Vec<usize> = report.averaged.iter().map(|r| r.particles).collect();
    let gamma = cfg.scale_for(0.05).unwrap().gamma;
    let residual = report.slope("residual").map_or(f64::NAN, |s| s.slope);
    let w1: Vec<String> = report
        .averaged
        .iter()
        .map(|r| format!("{:.2e}", r.w1.iter().copied().fold(0.0, f64::max)))
        .collect();
    outcome(
        counts == [125, 1000, 8000]
            && report.failures().count() == 0
            && report.w1_monotone()
            && residual >= gamma - 0.5,
        format!(
            "N = {counts:?}, max W1 over checkpoints {}, W1 decreasing: {}, residual slope {residual:.3} (need {:.2})",
            w1.join(" > "),
            report.w1_monotone(),
            gamma - 0.5
        ),
    )
}

fn regime_boundary() -> Outcome {
    let slope = |alpha: f64| {
        let cfg = survey_config(alpha, 0.4, 0.2, alpha <= 1.5 + 0.01);
        let dir = tempfile::tempdir().unwrap();
        field_survey(&cfg, dir.path())
            .unwrap()
            .deviation_slope
            .unwrap()
            .slope
    };
    let below = slope(1.2);
    let above = slope(2.0);
    let gamma = ScaleParameters::new(0.1, 2.0, 0.01).unwrap().gamma;
    outcome(
        below < 0.2 && above >= gamma - 0.3,
        format!("deviation slope {below:.3} at alpha = 1.2, {above:.3} at alpha = 2"),
    )
}

fn wasserstein_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64)> {
        let n = rng.random_range(1..=5);
        (0..n)
            .map(|_| (rng.random_range(0.0..5.0), rng.random_range(0.01..1.0)))
            .collect()
    };
    let measure = |atoms: &[(f64, f64)]| EmpiricalMeasure {
        atoms: atoms.to_vec(),
        total_weight: atoms.iter().map(|a| a.1).sum(),
    };
    let (mut worst, mut axiom_failures) = (0.0f64, 0usize);
    for _ in 0..10_000 {
        let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let (ma, mb, mc) = (measure(&a), measure(&b), measure(&c));
        let ab = wasserstein1(&ma, &mb).unwrap();
        worst = worst.max((ab - transport_cost(&a, &b).unwrap()).abs());
        let ok = ab >= 0.0
            && ab == wasserstein1(&mb, &ma).unwrap()
            && wasserstein1(&ma, &ma).unwrap() == 0.0
            && wasserstein1(&ma, &mc).unwrap() <= ab + wasserstein1(&mb, &mc).unwrap() + 1e-12;
        axiom_failures += usize::from(!ok);
    }
    outcome(
        worst <= 1e-10 && axiom_failures == 0,
        format!("10000 pairs, max discrepancy {worst:.1e}, axiom failures {axiom_failures}"),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() {
    let mut results: Vec<(u32, Outcome, Duration, Duration)> = Vec::new();
    let (c1, t1) = timed(closure_identities);
    results.push((1, c1, t1, Duration::from_secs(1)));
    let ((c2, c3), t2) = timed(conservation_and_envelope);
    results.push((2, c2, t2, Duration::from_secs(30)));
    results.push((3, c3, t2, Duration::from_secs(30)));
    let (c4, t4) = timed(monopole_rates);
    results.push((4, c4, t4, Duration::from_secs(60)));
    let (c5, t5) = timed(pde_order);
    results.push((5, c5, t5, Duration::from_secs(30)));
    let (c6, t6) = timed(homogenization);
    results.push((6, c6, t6, Duration::from_secs(300)));
    let (c7, t7) = timed(regime_boundary);
    results.push((7, c7, t7, Duration::from_secs(60)));
    let (c8, t8) = timed(wasserstein_oracle);
    results.push((8, c8, t8, Duration::from_secs(10)));

    let mut failed = 0;
    for (k, o, took, budget) in &results {
        let ok = o.passed && took <= budget;
        failed += usize::from(!ok);
        println!(
            "{} criterion {k}: {} [{:.2} s of {} s]",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
