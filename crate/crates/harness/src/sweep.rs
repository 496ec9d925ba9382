//! Convergence sweep over lattice spacings and seeds.

use std::path::{Path, PathBuf};

use lsw_core::lsw_pde::DensityTrajectory;
use lsw_core::measures::{empirical_from_snapshot, wasserstein1};
use lsw_core::particle_sim::growth_law_deviation;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::csv::{format_real, CsvWriter, Field};
use crate::error::HarnessError;
use crate::fields;
use crate::runs::{
    build_system, max_residual, pde_initial, simulate_system, solve_density, survey_at,
    test_functions, write_particle_files,
};
use crate::stats::{loglog_slope, Slope};

/// Per-step growth allowed before W1 counts as increasing along the sweep.
pub const W1_SLACK: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub delta: f64,
    pub seed: u64,
    pub particles: usize,
    pub extinct_fraction: f64,
    /// W1 at each checkpoint.
    pub w1: Vec<f64>,
    pub residual: f64,
    pub max_deviation: f64,
    pub defect_max: f64,
    pub growth_law_deviation: f64,
    pub invariants_passed: bool,
}

#[derive(Debug, Clone)]
pub enum CellOutcome {
    Done(CellResult),
    Failed {
        delta: f64,
        seed: u64,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct SlopeRow {
    pub quantity: String,
    pub slope: Option<Slope>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub checkpoints: Vec<f64>,
    pub cells: Vec<CellOutcome>,
    /// Seed-averaged rows, ordered by decreasing delta.
    pub averaged: Vec<CellResult>,
    pub slopes: Vec<SlopeRow>,
    /// Checkpoints at which W1 grew by more than the slack between
    /// consecutive deltas.
    pub w1_flags: Vec<f64>,
}

impl SweepReport {
    pub fn slope(&self, quantity: &str) -> Option<&Slope> {
        self.slopes
            .iter()
            .find(|s| s.quantity == quantity)
            .and_then(|s| s.slope.as_ref())
    }

    pub fn w1_monotone(&self) -> bool {
        self.w1_flags.is_empty()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellOutcome> {
        self.cells
            .iter()
            .filter(|c| matches!(c, CellOutcome::Failed { .. }))
    }
}

fn checkpoints(cfg: &RunConfig) -> Vec<f64> {
    if cfg.sweep.checkpoints.is_empty() {
        vec![cfg.horizon / 4.0, cfg.horizon / 2.0, cfg.horizon]
    } else {
        cfg.sweep.checkpoints.clone()
    }
}

fn cell_dir(out: &Path, delta: f64, seed: u64) -> PathBuf {
    out.join(format!("delta_{delta}_seed_{seed}"))
}

fn run_cell(
    cfg: &RunConfig,
    delta: f64,
    seed: u64,
    pde: &DensityTrajectory,
    checkpoints: &[f64],
    out: &Path,
) -> Result<CellResult, HarnessError> {
    let system = build_system(cfg, delta, cfg.scale_for(delta)?, seed)?;
    let report = simulate_system(cfg, &system)?;
    let traj = &report.trajectory;
    let mut w1 = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let (Some(k), Some(j)) = (
            traj.snapshot_at(t),
            pde.times
                .iter()
                .position(|&s| (s - t).abs() <= 1e-12 * t.max(1.0)),
        ) else {
            return Err(HarnessError::numerical(format!(
                "no snapshot at checkpoint {t}"
            )));
        };
        let m = empirical_from_snapshot(&traj.snapshots[k]);
        w1.push(if m.is_empty() {
            f64::NAN
        } else {
            wasserstein1(&m, &pde.snapshots[j]).map_err(HarnessError::numerical)?
        });
    }
    let residual = max_residual(traj, &test_functions(cfg)?)?;
    let survey = survey_at(cfg, delta, seed)?;
    write_particle_files(cfg, &report, &cell_dir(out, delta, seed))?;
    Ok(CellResult {
        delta,
        seed,
        particles: system.len(),
        extinct_fraction: 1.0 - traj.last().active_count() as f64 / system.len() as f64,
        w1,
        residual,
        max_deviation: survey.max_deviation,
        defect_max: survey.defect_max,
        growth_law_deviation: growth_law_deviation(traj),
        invariants_passed: report.passed(),
    })
}

fn average(rows: &[&CellResult]) -> CellResult {
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&CellResult) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let first = rows[0];
    CellResult {
        delta: first.delta,
        seed: first.seed,
        particles: first.particles,
        extinct_fraction: mean(&|r| r.extinct_fraction),
        w1: (0..first.w1.len()).map(|k| mean(&|r| r.w1[k])).collect(),
        residual: mean(&|r| r.residual),
        max_deviation: mean(&|r| r.max_deviation),
        defect_max: mean(&|r| r.defect_max),
        growth_law_deviation: mean(&|r| r.growth_law_deviation),
        invariants_passed: rows.iter().all(|r| r.invariants_passed),
    }
}

/// `sweep`: every (delta, seed) cell is integrated and compared with the PDE
/// solution started from the histogram of the finest lattice's radii for
/// that seed. Writes per-cell directories, `summary.csv` and `slopes.csv`.
pub fn run_convergence_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepReport, HarnessError> {
    let mut deltas = cfg.sweep.deltas.clone();
    if deltas.len() < 3 {
        return Err(HarnessError::config(
            "sweep.deltas",
            format!(
                "at least 3 points required for a slope, got {}",
                deltas.len()
            ),
        ));
    }
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.dedup();
    let seeds = if cfg.sweep.seeds.is_empty() {
        vec![cfg.initial.seed]
    } else {
        cfg.sweep.seeds.clone()
    };
    let checkpoints = checkpoints(cfg);
    let mut cfg = cfg.clone();
    cfg.sweep.checkpoints = checkpoints.clone();
    let cfg = &cfg;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.workers)
        .build()
        .map_err(HarnessError::numerical)?;
    let finest = *deltas.last().expect("nonempty");

    let pdes: Vec<DensityTrajectory> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let sys = build_system(cfg, finest, cfg.scale_for(finest)?, seed)?;
                let initial = pde_initial(cfg, Some((&sys.radii, sys.initial_count)))?;
                Ok(solve_density(cfg, &initial)?.trajectory)
            })
            .collect::<Result<_, HarnessError>>()
    })?;

    let jobs: Vec<(f64, usize)> = deltas
        .iter()
        .flat_map(|&d| (0..seeds.len()).map(move |s| (d, s)))
        .collect();
    let cells: Vec<CellOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(
                |&(delta, s)| match run_cell(cfg, delta, seeds[s], &pdes[s], &checkpoints, out) {
                    Ok(r) => CellOutcome::Done(r),
                    Err(e) => CellOutcome::Failed {
                        delta,
                        seed: seeds[s],
                        reason: e.to_string(),
                    },
                },
            )
            .collect()
    });

    let averaged: Vec<CellResult> = deltas
        .iter()
        .filter_map(|&d| {
            let rows: Vec<&CellResult> = cells
                .iter()
                .filter_map(|c| match c {
                    CellOutcome::Done(r) if r.delta == d => Some(r),
                    _ => None,
                })
                .collect();
            (!rows.is_empty()).then(|| average(&rows))
        })
        .collect();

    let ds: Vec<f64> = averaged.iter().map(|r| r.delta).collect();
    let series = |f: &dyn Fn(&CellResult) -> f64| averaged.iter().map(f).collect::<Vec<_>>();
    let mut slopes = vec![
        SlopeRow {
            quantity: "residual".into(),
            slope: loglog_slope(&ds, &series(&|r| r.residual)),
        },
        SlopeRow {
            quantity: "max_deviation".into(),
            slope: loglog_slope(&ds, &series(&|r| r.max_deviation)),
        },
        SlopeRow {
            quantity: "defect_max".into(),
            slope: loglog_slope(&ds, &series(&|r| r.defect_max)),
        },
        SlopeRow {
            quantity: "growth_law_deviation".into(),
            slope: loglog_slope(&ds, &series(&|r| r.growth_law_deviation)),
        },
    ];
    let mut w1_flags = Vec::new();
    for (k, &t) in checkpoints.iter().enumerate() {
        let w = series(&|r| r.w1[k]);
        slopes.push(SlopeRow {
            quantity: format!("w1_t{k}"),
            slope: loglog_slope(&ds, &w),
        });
        if w.windows(2).any(|p| !(p[1] <= (1.0 + W1_SLACK) * p[0])) || averaged.len() < deltas.len()
        {
            w1_flags.push(t);
        }
    }

    let report = SweepReport {
        checkpoints,
        cells,
        averaged,
        slopes,
        w1_flags,
    };
    write_summary(cfg, &report, out)?;
    Ok(report)
}

fn write_summary(cfg: &RunConfig, report: &SweepReport, out: &Path) -> Result<(), HarnessError> {
    let hash = cfg.hash();
    let meta = vec![
        ("command", "sweep".to_string()),
        ("alpha", cfg.scale.alpha.to_string()),
        (
            "checkpoints",
            report
                .checkpoints
                .iter()
                .map(|t| format_real(*t))
                .collect::<Vec<_>>()
                .join(" "),
        ),
        ("w1_monotone", report.w1_monotone().to_string()),
    ];
    let mut columns = vec![
        "delta",
        "seed",
        "status",
        "particles",
        "gamma",
        "extinct_fraction",
    ];
    let w1_names: Vec<String> = (0..report.checkpoints.len())
        .map(|k| format!("w1_t{k}"))
        .collect();
    columns.extend(w1_names.iter().map(String::as_str));
    columns.extend([
        "residual",
        "max_deviation",
        "defect_max",
        "growth_law_deviation",
        "invariants_passed",
    ]);
    let mut w = CsvWriter::create(&out.join("summary.csv"), &hash, &meta, &columns)?;
    for c in &report.cells {
        match c {
            CellOutcome::Done(r) => {
                let gamma = cfg.scale_for(r.delta).map_or(f64::NAN, |s| s.gamma);
                let mut row = fields![
                    r.delta,
                    r.seed,
                    "ok",
                    r.particles,
                    gamma,
                    r.extinct_fraction
                ];
                row.extend(r.w1.iter().map(|&x| Field::from(x)));
                row.extend(fields![
                    r.residual,
                    r.max_deviation,
                    r.defect_max,
                    r.growth_law_deviation,
                    r.invariants_passed
                ]);
                w.row(row)?;
            }
            CellOutcome::Failed {
                delta,
                seed,
                reason,
            } => {
                let mut row = fields![
                    *delta,
                    *seed,
                    format!("failed: {}", reason.replace(',', ";"))
                ];
                row.extend((3..columns.len()).map(|_| Field::from("")));
                w.row(row)?;
            }
        }
    }
    w.finish()?;

    let mut w = CsvWriter::create(
        &out.join("slopes.csv"),
        &hash,
        &meta[..1],
        &[
            "quantity",
            "slope",
            "intercept",
            "ci_low",
            "ci_high",
            "points",
        ],
    )?;
    for s in &report.slopes {
        match &s.slope {
            Some(f) => w.row(fields![
                s.quantity.as_str(),
                f.slope,
                f.intercept,
                f.ci_low,
                f.ci_high,
                f.points
            ])?,
            None => w.row(fields![
                s.quantity.as_str(),
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                0usize
            ])?,
        }
    }
    w.finish()?;
    Ok(())
}
