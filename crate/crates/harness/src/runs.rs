//! Single runs: particle simulation, PDE solve, field survey, and the
//! particle/PDE comparison.

use std::path::Path;

use lsw_core::lsw_pde::{solve, DensityTrajectory, PdeError, RadiusDensity};
use lsw_core::measures::{
    active_fraction_series, empirical_from_snapshot, wasserstein1, weak_form_residual,
    MeasureSeries, TestFunction,
};
use lsw_core::monopole::{deviation_survey, max_boundary_defect, place_lattice, FieldError};
use lsw_core::particle_sim::{
    check_extinction_envelopes, check_surface_monotone, check_volume_budget, simulate,
    uniform_bound_monitor, EnvelopeReport, InvariantCheck, SimError, Trajectory,
    UniformBoundReport,
};
use lsw_core::{ParticleSystem, ScaleParameters};
use serde::Serialize;

use crate::config::{PdeInitial, RunConfig};
use crate::csv::CsvWriter;
use crate::error::HarnessError;
use crate::fields;
use crate::stats::{loglog_slope, Slope};

pub(crate) fn sim_error(e: SimError) -> HarnessError {
    match e {
        SimError::InvalidConfig(m) => HarnessError::config("integrator", m),
        other => HarnessError::numerical(other),
    }
}

pub(crate) fn field_error(e: FieldError) -> HarnessError {
    match e {
        FieldError::Capacity { .. } | FieldError::InvalidParameters(_) => {
            HarnessError::config("scale.delta", e)
        }
        other => HarnessError::numerical(other),
    }
}

pub(crate) fn pde_error(e: PdeError) -> HarnessError {
    match e {
        PdeError::InvalidGrid(_) | PdeError::InvalidDensity(_) => HarnessError::config("pde", e),
        other => HarnessError::numerical(other),
    }
}

/// Particles on the lattice of spacing `delta` with radii drawn from the
/// configured distribution; `scale` decides the dynamics.
pub fn build_system(
    cfg: &RunConfig,
    delta: f64,
    scale: ScaleParameters,
    seed: u64,
) -> Result<ParticleSystem, HarnessError> {
    let mut centers = place_lattice(&cfg.lattice(delta), seed).map_err(field_error)?;
    let n = cfg.initial.radii.count(centers.len());
    if n > centers.len() {
        return Err(HarnessError::config(
            "initial.radii",
            format!(
                "{n} radii but the lattice of spacing {delta} has {} sites",
                centers.len()
            ),
        ));
    }
    centers.truncate(n);
    let radii = cfg
        .initial
        .radii
        .sample(&centers, seed)
        .map_err(|e| HarnessError::config("initial.radii", e))?;
    let system = ParticleSystem::new(scale, radii, centers)
        .map_err(|e| HarnessError::config("initial", e))?;
    system
        .check_radius_bound(cfg.initial.radii.radius_bound())
        .map_err(|e| HarnessError::config("initial.radii", e))?;
    Ok(system)
}

/// The run's own system: configured delta, scale and seed.
pub fn initial_system(cfg: &RunConfig) -> Result<ParticleSystem, HarnessError> {
    build_system(cfg, cfg.scale.delta, cfg.scale()?, cfg.initial.seed)
}

fn meta(
    cfg: &RunConfig,
    command: &str,
    scale: &ScaleParameters,
    n: usize,
) -> Vec<(&'static str, String)> {
    vec![
        ("command", command.to_string()),
        ("delta", cfg.scale.delta.to_string()),
        ("alpha", scale.alpha.to_string()),
        ("gamma", scale.gamma.to_string()),
        ("delta_alpha", scale.delta_alpha().to_string()),
        ("particles", n.to_string()),
        ("seed", cfg.initial.seed.to_string()),
    ]
}

#[derive(Debug, Clone)]
pub struct ParticleReport {
    pub trajectory: Trajectory,
    pub checks: Vec<InvariantCheck>,
    pub envelope: EnvelopeReport,
    pub bounds: UniformBoundReport,
}

impl ParticleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.envelope.passed() && !self.bounds.violated
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        if !self.envelope.passed() {
            out.push(format!(
                "extinction_envelope: {} violations",
                self.envelope.violations
            ));
        }
        if self.bounds.violated {
            out.push(format!(
                "uniform_bounds: max u_bar {} / max R {} beyond {}x initial",
                self.bounds.max_u_bar, self.bounds.max_radius, self.bounds.factor
            ));
        }
        out
    }
}

pub fn simulate_system(
    cfg: &RunConfig,
    system: &ParticleSystem,
) -> Result<ParticleReport, HarnessError> {
    let traj =
        simulate(system, cfg.horizon, &cfg.integrator, &cfg.schedule()).map_err(sim_error)?;
    Ok(ParticleReport {
        checks: vec![check_volume_budget(&traj), check_surface_monotone(&traj)],
        envelope: check_extinction_envelopes(&traj),
        bounds: uniform_bound_monitor(&traj, 10.0),
        trajectory: traj,
    })
}

/// `simulate`: integrates the configured system and writes
/// `trajectory.csv`, `extinctions.csv`, `invariants.csv` and, with profiles
/// enabled, `radii.csv`.
pub fn run_particles(cfg: &RunConfig, out: &Path) -> Result<ParticleReport, HarnessError> {
    let system = initial_system(cfg)?;
    let report = simulate_system(cfg, &system)?;
    write_particle_files(cfg, &report, out)?;
    Ok(report)
}

pub(crate) fn write_particle_files(
    cfg: &RunConfig,
    report: &ParticleReport,
    out: &Path,
) -> Result<(), HarnessError> {
    let hash = cfg.hash();
    let traj = &report.trajectory;
    let first = &traj.snapshots[0];
    let meta = meta(cfg, "simulate", &first.scale, first.initial_count);

    let mut w = CsvWriter::create(
        &out.join("trajectory.csv"),
        &hash,
        &meta,
        &[
            "time",
            "active_count",
            "volume",
            "surface",
            "u_bar",
            "min_radius",
            "max_radius",
            "dissipation",
            "active_fraction",
        ],
    )?;
    for ((t, snap), d) in traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .zip(&traj.diagnostics_series)
    {
        w.row(fields![
            *t,
            snap.active_count(),
            d.total_volume,
            d.total_surface,
            d.u_bar,
            snap.min_active_radius().unwrap_or(0.0),
            snap.max_radius(),
            d.dissipation,
            d.active_fraction,
        ])?;
    }
    w.finish()?;

    let mut w = CsvWriter::create(
        &out.join("extinctions.csv"),
        &hash,
        &meta,
        &["index", "time"],
    )?;
    for ev in &traj.extinction_log {
        w.row(fields![ev.index, ev.time])?;
    }
    w.finish()?;

    let mut w = CsvWriter::create(
        &out.join("invariants.csv"),
        &hash,
        &meta,
        &["check", "passed", "worst", "detail"],
    )?;
    for c in &report.checks {
        w.row(fields![
            c.name,
            c.passed,
            c.worst,
            c.detail.replace(',', ";")
        ])?;
    }
    let env = &report.envelope;
    w.row(fields![
        "extinction_envelope",
        env.passed(),
        env.violations as f64,
        format!(
            "{} samples; R/sqrt(t_i - t) in [{}; {}]",
            env.samples_checked, env.min_ratio, env.max_ratio
        ),
    ])?;
    let b = &report.bounds;
    w.row(fields![
        "uniform_bounds",
        !b.violated,
        (b.max_u_bar / b.initial_u_bar).max(b.max_radius / b.initial_max_radius),
        format!("max u_bar {}; max R {}", b.max_u_bar, b.max_radius),
    ])?;
    w.finish()?;

    if cfg.output.profiles {
        let mut w = CsvWriter::create(
            &out.join("radii.csv"),
            &hash,
            &meta,
            &["snapshot", "time", "index", "radius"],
        )?;
        for (k, (t, snap)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
            for (i, (&r, &a)) in snap.radii.iter().zip(&snap.active).enumerate() {
                if a {
                    w.row(fields![k, *t, i, r])?;
                }
            }
        }
        w.finish()?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PdeReport {
    pub trajectory: DensityTrajectory,
    /// Largest `|active + escaped - initial| / initial` over snapshots.
    pub mass_ledger_error: f64,
    pub third_moment_drift: f64,
}

impl PdeReport {
    pub fn passed(&self) -> bool {
        self.mass_ledger_error <= 1e-12
            && self
                .trajectory
                .snapshots
                .iter()
                .all(|s| s.values.iter().all(|v| *v >= 0.0))
    }
}

/// Initial density of the PDE run: a configured profile, explicit cells, or
/// the histogram of `radii` over `total` particles.
pub fn pde_initial(
    cfg: &RunConfig,
    radii: Option<(&[f64], usize)>,
) -> Result<RadiusDensity, HarnessError> {
    let grid = cfg.pde.grid()?;
    let density = match &cfg.pde.initial {
        PdeInitial::Histogram => {
            let (r, total) = match radii {
                Some(x) => x,
                None => {
                    let sys = initial_system(cfg)?;
                    return pde_initial(cfg, Some((&sys.radii, sys.initial_count)));
                }
            };
            let active: Vec<f64> = r.iter().copied().filter(|&x| x > 0.0).collect();
            RadiusDensity::from_samples(grid, &active, total).map_err(pde_error)?
        }
        PdeInitial::Cells { values } => {
            RadiusDensity::new(grid, values.clone()).map_err(pde_error)?
        }
        other => other
            .profile()
            .expect("analytic profile")
            .discretize(&grid)
            .map_err(pde_error)?,
    };
    if !(density.active_mass > 0.0) {
        return Err(HarnessError::config(
            "pde.initial",
            "extinct input: initial density has zero mass",
        ));
    }
    Ok(density)
}

pub fn solve_density(cfg: &RunConfig, initial: &RadiusDensity) -> Result<PdeReport, HarnessError> {
    let traj = solve(
        initial,
        cfg.pde.regime,
        cfg.horizon,
        &cfg.output_times(),
        &cfg.pde.solver(),
    )
    .map_err(pde_error)?;
    let m0 = traj.initial_mass;
    let mass_ledger_error = traj
        .records
        .iter()
        .map(|r| ((r.active_mass + r.escaped_mass - m0) / m0).abs())
        .fold(0.0, f64::max);
    Ok(PdeReport {
        third_moment_drift: traj.third_moment_drift(),
        mass_ledger_error,
        trajectory: traj,
    })
}

/// `pde`: solves the configured transport problem and writes `moments.csv`
/// and, with profiles enabled, `profiles/profile_<k>.csv`.
pub fn run_pde(cfg: &RunConfig, out: &Path) -> Result<PdeReport, HarnessError> {
    let initial = pde_initial(cfg, None)?;
    let report = solve_density(cfg, &initial)?;
    let hash = cfg.hash();
    let traj = &report.trajectory;
    let grid = &initial.grid;
    let mut meta = vec![
        ("command", "pde".to_string()),
        ("regime", format!("{:?}", cfg.pde.regime).to_lowercase()),
        ("r_min", grid.r_min.to_string()),
        ("r_max", grid.r_max.to_string()),
        ("cells", grid.cell_count.to_string()),
        ("steps", traj.steps.to_string()),
    ];
    let mut w = CsvWriter::create(
        &out.join("moments.csv"),
        &hash,
        &meta,
        &[
            "time",
            "u_bar",
            "moment0",
            "moment1",
            "moment2",
            "moment3",
            "active_mass",
            "escaped_mass",
        ],
    )?;
    for r in &traj.records {
        let m = r.moments;
        w.row(fields![
            r.time,
            r.u_bar,
            m[0],
            m[1],
            m[2],
            m[3],
            r.active_mass,
            r.escaped_mass
        ])?;
    }
    w.finish()?;
    if cfg.output.profiles {
        meta.truncate(1);
        for (k, (t, snap)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
            let mut m = meta.clone();
            m.push(("time", crate::csv::format_real(*t)));
            let mut w = CsvWriter::create(
                &out.join("profiles").join(format!("profile_{k:04}.csv")),
                &hash,
                &m,
                &["r_center", "n"],
            )?;
            for (r, n) in snap.grid.centers.iter().zip(&snap.values) {
                w.row(fields![*r, *n])?;
            }
            w.finish()?;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyRow {
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub particles: usize,
    pub u_bar: f64,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub envelope: f64,
    pub defect_max: f64,
}

#[derive(Debug, Clone)]
pub struct SurveyReport {
    pub rows: Vec<SurveyRow>,
    pub deviation_slope: Option<Slope>,
    pub defect_slope: Option<Slope>,
}

/// Deviation survey and boundary defect of the initial configuration at one
/// `delta` (always with the finite-`delta` scale, even under `zero_drag`).
pub fn survey_at(cfg: &RunConfig, delta: f64, seed: u64) -> Result<SurveyRow, HarnessError> {
    let s = &cfg.scale;
    let scale = if s.diagnostics_only {
        ScaleParameters::diagnostics_only(delta, s.alpha, s.epsilon)
    } else {
        ScaleParameters::new(delta, s.alpha, s.epsilon)
    }
    .map_err(|e| HarnessError::config("scale", e))?;
    let system = build_system(cfg, delta, scale, seed)?;
    let u = system.mean_field().map_err(HarnessError::numerical)?.u_bar;
    let survey =
        deviation_survey(&system, u, cfg.survey.samples, cfg.survey.seed).map_err(field_error)?;
    let defect =
        max_boundary_defect(&system, u, cfg.survey.defect_particles).map_err(field_error)?;
    Ok(SurveyRow {
        delta,
        alpha: scale.alpha,
        gamma: scale.gamma,
        particles: system.len(),
        u_bar: u,
        max_deviation: survey.max_deviation,
        mean_deviation: survey.mean_deviation,
        envelope: survey.envelope,
        defect_max: defect,
    })
}

/// `field-survey`: one row per delta (the sweep deltas, or the configured
/// delta), written to `survey.csv`.
pub fn field_survey(cfg: &RunConfig, out: &Path) -> Result<SurveyReport, HarnessError> {
    let deltas = if cfg.sweep.deltas.is_empty() {
        vec![cfg.scale.delta]
    } else {
        cfg.sweep.deltas.clone()
    };
    let rows = deltas
        .iter()
        .map(|&d| survey_at(cfg, d, cfg.initial.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let report = SurveyReport {
        deviation_slope: loglog_slope(
            &ds,
            &rows.iter().map(|r| r.max_deviation).collect::<Vec<_>>(),
        ),
        defect_slope: loglog_slope(&ds, &rows.iter().map(|r| r.defect_max).collect::<Vec<_>>()),
        rows,
    };
    let mut meta = vec![("command", "field-survey".to_string())];
    for (name, s) in [
        ("deviation_slope", &report.deviation_slope),
        ("defect_slope", &report.defect_slope),
    ] {
        if let Some(s) = s {
            meta.push((name, format!("{} [{}; {}]", s.slope, s.ci_low, s.ci_high)));
        }
    }
    let mut w = CsvWriter::create(
        &out.join("survey.csv"),
        &cfg.hash(),
        &meta,
        &[
            "delta",
            "alpha",
            "gamma",
            "particles",
            "u_bar",
            "max_deviation",
            "mean_deviation",
            "envelope",
            "defect_max",
        ],
    )?;
    for r in &report.rows {
        w.row(fields![
            r.delta,
            r.alpha,
            r.gamma,
            r.particles,
            r.u_bar,
            r.max_deviation,
            r.mean_deviation,
            r.envelope,
            r.defect_max
        ])?;
    }
    w.finish()?;
    Ok(report)
}

/// Weak-form test functions over `[0, horizon)` for the configured windows.
pub fn test_functions(cfg: &RunConfig) -> Result<Vec<TestFunction>, HarnessError> {
    cfg.sweep
        .test_windows
        .iter()
        .map(|w| {
            TestFunction::bump(cfg.horizon, w[0], w[1])
                .map_err(|e| HarnessError::config("sweep.test_windows", e))
        })
        .collect()
}

/// Largest weak-form residual over the test functions.
pub fn max_residual(
    series: &impl MeasureSeries,
    phis: &[TestFunction],
) -> Result<f64, HarnessError> {
    phis.iter()
        .map(|phi| weak_form_residual(series, phi).map_err(HarnessError::numerical))
        .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub time: f64,
    pub w1: f64,
    pub active_fraction_particles: f64,
    pub active_fraction_pde: f64,
    pub u_bar_particles: f64,
    pub u_bar_pde: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub residual_particles: f64,
    pub residual_pde: f64,
    pub particles: ParticleReport,
    pub pde: PdeReport,
}

/// W1 between the particle measure and the PDE density at every common
/// snapshot time.
pub fn compare_trajectories(
    particles: &Trajectory,
    pde: &DensityTrajectory,
) -> Result<Vec<CompareRow>, HarnessError> {
    let a_part = active_fraction_series(particles);
    let a_pde = active_fraction_series(pde);
    let mut rows = Vec::new();
    for (k, &t) in particles.times.iter().enumerate() {
        let Some(j) = pde
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.max(1.0))
        else {
            continue;
        };
        let m = empirical_from_snapshot(&particles.snapshots[k]);
        if m.is_empty() {
            continue;
        }
        let w1 = wasserstein1(&m, &pde.snapshots[j]).map_err(HarnessError::numerical)?;
        rows.push(CompareRow {
            time: t,
            w1,
            active_fraction_particles: a_part[k].1,
            active_fraction_pde: a_pde[j].1,
            u_bar_particles: particles.closure(k).unwrap_or(f64::NAN),
            u_bar_pde: pde.records[j].u_bar,
        });
    }
    Ok(rows)
}

/// `compare`: particle run plus the PDE run started from its initial
/// histogram (or the configured PDE initial data); writes `compare.csv`.
pub fn compare(cfg: &RunConfig, out: &Path) -> Result<CompareReport, HarnessError> {
    let system = initial_system(cfg)?;
    let particles = simulate_system(cfg, &system)?;
    let initial = pde_initial(cfg, Some((&system.radii, system.initial_count)))?;
    let pde = solve_density(cfg, &initial)?;
    let rows = compare_trajectories(&particles.trajectory, &pde.trajectory)?;
    let phis = test_functions(cfg)?;
    let report = CompareReport {
        residual_particles: max_residual(&particles.trajectory, &phis)?,
        residual_pde: max_residual(&pde.trajectory, &phis)?,
        rows,
        particles,
        pde,
    };
    let meta = vec![
        ("command", "compare".to_string()),
        (
            "residual_particles",
            crate::csv::format_real(report.residual_particles),
        ),
        ("residual_pde", crate::csv::format_real(report.residual_pde)),
    ];
    let mut w = CsvWriter::create(
        &out.join("compare.csv"),
        &cfg.hash(),
        &meta,
        &[
            "time",
            "w1",
            "active_fraction_particles",
            "active_fraction_pde",
            "u_bar_particles",
            "u_bar_pde",
        ],
    )?;
    for r in &report.rows {
        w.row(fields![
            r.time,
            r.w1,
            r.active_fraction_particles,
            r.active_fraction_pde,
            r.u_bar_particles,
            r.u_bar_pde
        ])?;
    }
    w.finish()?;
    write_particle_files(cfg, &report.particles, &out.join("particles"))?;
    Ok(report)
}
