//! Finite-volume solver for the limiting transport equation
//! `dn/dt + d/dR (v(R, u) n) = 0` on `[r_min, r_max]`.
//!
//! First-order upwind fluxes, mean field frozen per step from the pre-step
//! density, outflow through `r_min` (extinction) and a closed edge at `r_max`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::integrate16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("density is extinct: closure moments vanish")]
    Extinct,
    #[error("step dt = {dt:e} violates the CFL bound; admissible dt = {admissible:e}")]
    CflViolation { dt: f64, admissible: f64 },
    #[error("density reaches r_max = {r_max} with outward velocity (edge mass fraction {fraction:e}); enlarge the grid")]
    DomainTooSmall { r_max: f64, fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub cell_count: usize,
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
}

impl RadiusGrid {
    pub fn new(r_min: f64, r_max: f64, cell_count: usize) -> Result<Self, PdeError> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(PdeError::InvalidGrid(format!(
                "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if cell_count == 0 {
            return Err(PdeError::InvalidGrid("cell_count must be positive".into()));
        }
        let dr = (r_max - r_min) / cell_count as f64;
        let edges: Vec<f64> = (0..=cell_count).map(|k| r_min + k as f64 * dr).collect();
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            r_min,
            r_max,
            cell_count,
            edges,
            centers,
        })
    }

    pub fn dr(&self) -> f64 {
        (self.r_max - self.r_min) / self.cell_count as f64
    }

    /// Same domain with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.r_min, self.r_max, self.cell_count * factor)
            .expect("refinement of a valid grid")
    }

    /// Cell containing `r`, if any; `r_max` belongs to the last cell.
    pub fn locate(&self, r: f64) -> Option<usize> {
        if !(r >= self.r_min && r <= self.r_max) {
            return None;
        }
        let k = ((r - self.r_min) / self.dr()).floor() as usize;
        Some(k.min(self.cell_count - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KineticRegime {
    Reaction,
    Diffusion,
}

impl KineticRegime {
    pub fn velocity(self, r: f64, u_bar: f64) -> f64 {
        match self {
            Self::Reaction => u_bar - 1.0 / r,
            Self::Diffusion => (r * u_bar - 1.0) / (r * r),
        }
    }
}

/// Cell averages of `n(t, R)` with the extinction ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusDensity {
    pub grid: RadiusGrid,
    pub values: Vec<f64>,
    pub active_mass: f64,
    pub escaped_mass: f64,
}

impl RadiusDensity {
    pub fn new(grid: RadiusGrid, values: Vec<f64>) -> Result<Self, PdeError> {
        if values.len() != grid.cell_count {
            return Err(PdeError::InvalidDensity(format!(
                "{} values for {} cells",
                values.len(),
                grid.cell_count
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(PdeError::InvalidDensity(
                "values must be finite and nonnegative".into(),
            ));
        }
        let active_mass = values.iter().sum::<f64>() * grid.dr();
        Ok(Self {
            grid,
            values,
            active_mass,
            escaped_mass: 0.0,
        })
    }

    pub fn zeros(grid: RadiusGrid) -> Self {
        let n = grid.cell_count;
        Self::new(grid, vec![0.0; n]).expect("zero density is valid")
    }

    /// Midpoint-rule moment `sum R_c^k n_c dR`.
    pub fn moment(&self, k: i32) -> f64 {
        self.grid
            .centers
            .iter()
            .zip(&self.values)
            .map(|(r, n)| r.powi(k) * n)
            .sum::<f64>()
            * self.grid.dr()
    }

    pub fn moments(&self) -> [f64; 4] {
        [
            self.moment(0),
            self.moment(1),
            self.moment(2),
            self.moment(3),
        ]
    }

    /// Smallest and largest cell center carrying mass.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|v| *v > 0.0)?;
        let last = self.values.iter().rposition(|v| *v > 0.0)?;
        Some((self.grid.centers[first], self.grid.centers[last]))
    }

    /// Histogram of particle radii: `n = counts / (N_total dR)`, so the total
    /// mass is the fraction of `total` particles that are listed.
    pub fn from_samples(grid: RadiusGrid, radii: &[f64], total: usize) -> Result<Self, PdeError> {
        if total == 0 {
            return Err(PdeError::InvalidDensity(
                "histogram needs a positive particle count".into(),
            ));
        }
        let mut values = vec![0.0; grid.cell_count];
        let w = 1.0 / (total as f64 * grid.dr());
        for &r in radii {
            let k = grid.locate(r).ok_or_else(|| {
                PdeError::InvalidDensity(format!(
                    "radius {r} outside grid [{}, {}]",
                    grid.r_min, grid.r_max
                ))
            })?;
            values[k] += w;
        }
        Self::new(grid, values)
    }
}

/// Analytic initial densities, each normalized to unit mass on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialProfile {
    Uniform {
        low: f64,
        high: f64,
    },
    /// `(1 - s^2)^3` on `[low, high]`, `s` the rescaled coordinate in `[-1, 1]`.
    Bump {
        low: f64,
        high: f64,
    },
    /// Gaussian truncated to `[low, high]`.
    Gaussian {
        mean: f64,
        sd: f64,
        low: f64,
        high: f64,
    },
}

impl InitialProfile {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { low, high }
            | Self::Bump { low, high }
            | Self::Gaussian { low, high, .. } => (low, high),
        }
    }

    /// Unnormalized profile value.
    pub fn shape(&self, r: f64) -> f64 {
        let (low, high) = self.bounds();
        if r < low || r > high {
            return 0.0;
        }
        match *self {
            Self::Uniform { .. } => 1.0,
            Self::Bump { .. } => {
                let s = (2.0 * r - low - high) / (high - low);
                (1.0 - s * s).powi(3)
            }
            Self::Gaussian { mean, sd, .. } => (-0.5 * ((r - mean) / sd).powi(2)).exp(),
        }
    }

    /// Exact (to quadrature accuracy) cell averages on `grid`, scaled to
    /// total mass one.
    pub fn discretize(&self, grid: &RadiusGrid) -> Result<RadiusDensity, PdeError> {
        let (low, high) = self.bounds();
        if !(low >= grid.r_min && high <= grid.r_max && high > low) {
            return Err(PdeError::InvalidDensity(format!(
                "profile support [{low}, {high}] not inside grid [{}, {}]",
                grid.r_min, grid.r_max
            )));
        }
        if let Self::Gaussian { sd, .. } = *self {
            if !(sd > 0.0) {
                return Err(PdeError::InvalidDensity("gaussian needs sd > 0".into()));
            }
        }
        let dr = grid.dr();
        let mut values: Vec<f64> = grid
            .edges
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].max(low), w[1].min(high));
                if b > a {
                    integrate16(|r| self.shape(r), a, b) / dr
                } else {
                    0.0
                }
            })
            .collect();
        let mass = values.iter().sum::<f64>() * dr;
        if !(mass > 0.0) {
            return Err(PdeError::InvalidDensity(
                "profile has no mass on the grid".into(),
            ));
        }
        for v in &mut values {
            *v /= mass;
        }
        RadiusDensity::new(grid.clone(), values)
    }
}

/// Mean field of the limit equation from the midpoint moments.
pub fn closure_mean_field(density: &RadiusDensity, regime: KineticRegime) -> Result<f64, PdeError> {
    let (num, den) = match regime {
        KineticRegime::Reaction => (density.moment(1), density.moment(2)),
        KineticRegime::Diffusion => (density.moment(0), density.moment(1)),
    };
    if !(den > 0.0) {
        return Err(PdeError::Extinct);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    SelfConsistent,
    /// Constant mean field, for tests against characteristics.
    Frozen(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeConfig {
    pub cfl: f64,
    pub closure: Closure,
    /// Upper bound on the step in addition to the CFL bound.
    pub dt_max: Option<f64>,
    /// Mass fraction tolerated in the last cell while its edge velocity
    /// points outward.
    pub edge_tolerance: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            cfl: 0.9,
            closure: Closure::SelfConsistent,
            dt_max: None,
            edge_tolerance: 1e-12,
        }
    }
}

impl PdeConfig {
    pub fn mean_field(
        &self,
        density: &RadiusDensity,
        regime: KineticRegime,
    ) -> Result<f64, PdeError> {
        match self.closure {
            Closure::SelfConsistent => closure_mean_field(density, regime),
            Closure::Frozen(u) => Ok(u),
        }
    }
}

fn edge_velocities(grid: &RadiusGrid, regime: KineticRegime, u_bar: f64) -> Vec<f64> {
    grid.edges
        .iter()
        .map(|&r| regime.velocity(r, u_bar))
        .collect()
}

/// Largest step keeping every occupied cell's outflow below `cfl` of its
/// content: `dt <= cfl dR / (v+_{right} + v-_{left})`.
pub fn admissible_dt(density: &RadiusDensity, regime: KineticRegime, u_bar: f64, cfl: f64) -> f64 {
    let v = edge_velocities(&density.grid, regime, u_bar);
    let dr = density.grid.dr();
    let n = density.grid.cell_count;
    let mut speed = 0.0f64;
    for i in 0..n {
        if density.values[i] > 0.0
            || (i > 0 && density.values[i - 1] > 0.0)
            || (i + 1 < n && density.values[i + 1] > 0.0)
        {
            // the closed edge at r_max never carries flux
            let right = if i + 1 == n { 0.0 } else { v[i + 1].max(0.0) };
            speed = speed.max(right + (-v[i]).max(0.0));
        }
    }
    if speed > 0.0 {
        cfl * dr / speed
    } else {
        f64::INFINITY
    }
}

/// One upwind step of size `dt` with the mean field of the pre-step density.
pub fn advect_step(
    density: &RadiusDensity,
    regime: KineticRegime,
    dt: f64,
    config: &PdeConfig,
) -> Result<RadiusDensity, PdeError> {
    if density.active_mass == 0.0 && density.values.iter().all(|v| *v == 0.0) {
        return Ok(density.clone());
    }
    let u = config.mean_field(density, regime)?;
    step_with(density, regime, u, dt, config)
}

fn step_with(
    density: &RadiusDensity,
    regime: KineticRegime,
    u_bar: f64,
    dt: f64,
    config: &PdeConfig,
) -> Result<RadiusDensity, PdeError> {
    let admissible = admissible_dt(density, regime, u_bar, config.cfl);
    if !(dt > 0.0) || dt > admissible * (1.0 + 1e-12) {
        return Err(PdeError::CflViolation { dt, admissible });
    }
    let grid = &density.grid;
    let n = grid.cell_count;
    let dr = grid.dr();
    let v = edge_velocities(grid, regime, u_bar);
    let last = density.values[n - 1];
    if v[n] > 0.0 && last > 0.0 {
        let fraction = last * dr / density.active_mass.max(f64::MIN_POSITIVE);
        if fraction > config.edge_tolerance {
            return Err(PdeError::DomainTooSmall {
                r_max: grid.r_max,
                fraction,
            });
        }
    }
    // flux[k] through edge k; edge 0 is outflow only, edge n is closed
    let mut flux = vec![0.0; n + 1];
    flux[0] = v[0].min(0.0) * density.values[0];
    for k in 1..n {
        flux[k] = v[k].max(0.0) * density.values[k - 1] + v[k].min(0.0) * density.values[k];
    }
    let ratio = dt / dr;
    let values: Vec<f64> = (0..n)
        .map(|i| (density.values[i] - ratio * (flux[i + 1] - flux[i])).max(0.0))
        .collect();
    let outflow = -dt * flux[0];
    Ok(RadiusDensity {
        grid: grid.clone(),
        active_mass: values.iter().sum::<f64>() * dr,
        values,
        escaped_mass: density.escaped_mass + outflow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRecord {
    pub time: f64,
    pub u_bar: f64,
    pub moments: [f64; 4],
    pub active_mass: f64,
    pub escaped_mass: f64,
}

#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<RadiusDensity>,
    pub records: Vec<DensityRecord>,
    pub steps: usize,
    pub initial_mass: f64,
    pub regime: KineticRegime,
}

impl DensityTrajectory {
    pub fn last(&self) -> &RadiusDensity {
        self.snapshots
            .last()
            .expect("trajectory has at least one snapshot")
    }

    /// `a(t) = active_mass(t) / active_mass(0)` at the snapshot times.
    pub fn active_fraction(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.active_mass / self.initial_mass)
            .collect()
    }

    /// Relative drift of `M3 + r_min^3 escaped` from its initial value.
    pub fn third_moment_drift(&self) -> f64 {
        let r3 = self.snapshots[0].grid.r_min.powi(3);
        let start = self.records[0].moments[3] + r3 * self.records[0].escaped_mass;
        let end = self
            .records
            .last()
            .map(|r| r.moments[3] + r3 * r.escaped_mass)
            .unwrap_or(start);
        ((end - start) / start).abs()
    }
}

/// Integrates `initial` to `horizon`, recording a snapshot at each of the
/// sorted `output_times` in `(0, horizon]` (the horizon is always recorded).
pub fn solve(
    initial: &RadiusDensity,
    regime: KineticRegime,
    horizon: f64,
    output_times: &[f64],
    config: &PdeConfig,
) -> Result<DensityTrajectory, PdeError> {
    if !(horizon > 0.0) {
        return Err(PdeError::InvalidDensity(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(config.cfl > 0.0 && config.cfl <= 1.0) {
        return Err(PdeError::InvalidGrid(format!(
            "cfl must lie in (0, 1], got {}",
            config.cfl
        )));
    }
    let mut outputs: Vec<f64> = output_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < horizon)
        .collect();
    outputs.push(horizon);
    outputs.sort_by(f64::total_cmp);
    outputs.dedup();

    let record = |d: &RadiusDensity, t: f64| -> Result<DensityRecord, PdeError> {
        Ok(DensityRecord {
            time: t,
            u_bar: config.mean_field(d, regime)?,
            moments: d.moments(),
            active_mass: d.active_mass,
            escaped_mass: d.escaped_mass,
        })
    };
    let mut state = initial.clone();
    let mut traj = DensityTrajectory {
        times: vec![0.0],
        snapshots: vec![state.clone()],
        records: vec![record(&state, 0.0)?],
        steps: 0,
        initial_mass: initial.active_mass,
        regime,
    };
    let mut t = 0.0;
    for &target in &outputs {
        while t < target {
            let u = config.mean_field(&state, regime)?;
            let mut dt = admissible_dt(&state, regime, u, config.cfl);
            if let Some(m) = config.dt_max {
                dt = dt.min(m);
            }
            let last = dt >= target - t;
            if last {
                dt = target - t;
            }
            state = step_with(&state, regime, u, dt, config)?;
            traj.steps += 1;
            t = if last { target } else { t + dt };
        }
        traj.times.push(t);
        traj.records.push(record(&state, t)?);
        traj.snapshots.push(state.clone());
    }
    Ok(traj)
}
