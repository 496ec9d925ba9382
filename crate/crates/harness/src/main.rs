#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsw_harness::{runs, sweep, HarnessError, RunConfig};

#[derive(Parser)]
#[command(
    name = "lsw",
    version,
    about = "Particle coarsening simulations and their mean-field limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the particle system.
    Simulate(Common),
    /// Solve the radius-density transport equation.
    Pde(Common),
    /// Monopole-field deviation survey and boundary defects.
    FieldSurvey(Common),
    /// Convergence sweep over lattice spacings and seeds.
    Sweep(Common),
    /// Particle run against the PDE started from its histogram.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `initial.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps; overrides `sweep.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Allow alpha at or below the regime threshold.
    #[arg(long)]
    diagnostics_only: bool,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), HarnessError> {
        let mut cfg = RunConfig::read(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.initial.seed = seed;
        }
        if let Some(w) = self.workers {
            cfg.sweep.workers = w;
        }
        if self.diagnostics_only {
            cfg.scale.diagnostics_only = true;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .unwrap_or_else(|| cfg.output.directory.clone());
        std::fs::create_dir_all(&out)?;
        std::fs::write(out.join("config.toml"), cfg.to_toml())?;
        Ok((cfg, out))
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Simulate(c) => {
            let (cfg, out) = c.load()?;
            let r = runs::run_particles(&cfg, &out)?;
            let last = r.trajectory.last();
            println!(
                "t = {}: {} of {} particles active, {} accepted steps, {} rejected",
                r.trajectory.horizon(),
                last.active_count(),
                last.len(),
                r.trajectory.stats.accepted,
                r.trajectory.stats.rejected
            );
            let failures = r.failures();
            if !failures.is_empty() {
                return Err(HarnessError::Invariant(failures.join("; ")));
            }
        }
        Command::Pde(c) => {
            let (cfg, out) = c.load()?;
            let r = runs::run_pde(&cfg, &out)?;
            println!(
                "{} steps, active mass {}, third-moment drift {:e}",
                r.trajectory.steps,
                r.trajectory.last().active_mass,
                r.third_moment_drift
            );
            if !r.passed() {
                return Err(HarnessError::Invariant(format!(
                    "mass ledger error {:e}",
                    r.mass_ledger_error
                )));
            }
        }
        Command::FieldSurvey(c) => {
            let (cfg, out) = c.load()?;
            let r = runs::field_survey(&cfg, &out)?;
            for row in &r.rows {
                println!(
                    "delta {}: max |zeta - u| {:e}, boundary defect {:e}",
                    row.delta, row.max_deviation, row.defect_max
                );
            }
            for (name, s) in [
                ("deviation", &r.deviation_slope),
                ("defect", &r.defect_slope),
            ] {
                if let Some(s) = s {
                    println!(
                        "{name} slope {:.3} [{:.3}, {:.3}]",
                        s.slope, s.ci_low, s.ci_high
                    );
                }
            }
        }
        Command::Sweep(c) => {
            let (cfg, out) = c.load()?;
            let r = sweep::run_convergence_sweep(&cfg, &out)?;
            for s in &r.slopes {
                if let Some(f) = &s.slope {
                    println!(
                        "{}: slope {:.3} [{:.3}, {:.3}]",
                        s.quantity, f.slope, f.ci_low, f.ci_high
                    );
                }
            }
            for c in r.failures() {
                if let sweep::CellOutcome::Failed {
                    delta,
                    seed,
                    reason,
                } = c
                {
                    eprintln!("cell delta {delta} seed {seed} failed: {reason}");
                }
            }
            if !r.w1_monotone() {
                eprintln!("W1 not decreasing across the sweep at t = {:?}", r.w1_flags);
            }
        }
        Command::Compare(c) => {
            let (cfg, out) = c.load()?;
            let r = runs::compare(&cfg, &out)?;
            for row in &r.rows {
                println!(
                    "t = {:.4}: W1 {:e}, a(t) {:.4} / {:.4}",
                    row.time, row.w1, row.active_fraction_particles, row.active_fraction_pde
                );
            }
            println!(
                "weak residual: particles {:e}, pde {:e}",
                r.residual_particles, r.residual_pde
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
