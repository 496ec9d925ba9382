//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations: a particle run on a cubic lattice, an LSW transport
//! solve, and a planar slice of the monopole field.

use lsw_core::lsw_pde::{solve, InitialProfile, KineticRegime, PdeConfig, RadiusGrid};
use lsw_core::monopole::{place_lattice, sample_field, LatticeConfig};
use lsw_core::particle_sim::{simulate, IntegratorConfig, OutputSchedule};
use lsw_core::sampling::RadiusDistribution;
use lsw_core::{ParticleSystem, ScaleParameters};
use wasm_bindgen::prelude::*;

fn js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

fn lattice_system(
    delta: f64,
    alpha: f64,
    radii: &RadiusDistribution,
    seed: u64,
) -> Result<ParticleSystem, JsError> {
    let scale = ScaleParameters::new(delta, alpha, lsw_core::DEFAULT_EPSILON).map_err(js)?;
    let centers = place_lattice(&LatticeConfig::new(delta, 0.0), seed).map_err(js)?;
    let r = radii.sample(&centers, seed).map_err(js)?;
    ParticleSystem::new(scale, r, centers).map_err(js)
}

#[wasm_bindgen]
pub struct ParticleRun {
    times: Vec<f64>,
    active_fraction: Vec<f64>,
    u_bar: Vec<f64>,
    volume: Vec<f64>,
    initial_radii: Vec<f64>,
    final_radii: Vec<f64>,
}

#[wasm_bindgen]
impl ParticleRun {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter, js_name = activeFraction)]
    pub fn active_fraction(&self) -> Vec<f64> {
        self.active_fraction.clone()
    }

    #[wasm_bindgen(getter, js_name = uBar)]
    pub fn u_bar(&self) -> Vec<f64> {
        self.u_bar.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn volume(&self) -> Vec<f64> {
        self.volume.clone()
    }

    #[wasm_bindgen(getter, js_name = initialRadii)]
    pub fn initial_radii(&self) -> Vec<f64> {
        self.initial_radii.clone()
    }

    /// Radii of the surviving particles at the horizon.
    #[wasm_bindgen(getter, js_name = finalRadii)]
    pub fn final_radii(&self) -> Vec<f64> {
        self.final_radii.clone()
    }
}

/// Particles on the lattice of spacing `delta` with radii uniform on
/// `[low, high]`, integrated up to `horizon`.
#[wasm_bindgen(js_name = simulateParticles)]
pub fn simulate_particles(
    delta: f64,
    alpha: f64,
    low: f64,
    high: f64,
    horizon: f64,
    seed: u32,
) -> Result<ParticleRun, JsError> {
    let system = lattice_system(
        delta,
        alpha,
        &RadiusDistribution::Uniform { low, high },
        seed.into(),
    )?;
    let traj = simulate(
        &system,
        horizon,
        &IntegratorConfig::default(),
        &OutputSchedule::every(horizon / 50.0),
    )
    .map_err(js)?;
    let d = &traj.diagnostics_series;
    Ok(ParticleRun {
        times: traj.times.clone(),
        active_fraction: d.iter().map(|x| x.active_fraction).collect(),
        u_bar: d.iter().map(|x| x.u_bar).collect(),
        volume: d.iter().map(|x| x.total_volume).collect(),
        initial_radii: system.radii.clone(),
        final_radii: traj.last().active_radii().collect(),
    })
}

#[wasm_bindgen]
pub struct DensityFrames {
    centers: Vec<f64>,
    times: Vec<f64>,
    values: Vec<f64>,
    u_bar: Vec<f64>,
}

#[wasm_bindgen]
impl DensityFrames {
    #[wasm_bindgen(getter)]
    pub fn centers(&self) -> Vec<f64> {
        self.centers.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter, js_name = uBar)]
    pub fn u_bar(&self) -> Vec<f64> {
        self.u_bar.clone()
    }

    /// Frame `k` occupies `values[k * cells .. (k + 1) * cells]`.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

/// Radius density from a smooth bump on `[low, high]`, evolved under the
/// reaction (`diffusion = false`) or diffusion closure.
#[wasm_bindgen(js_name = solveDensity)]
pub fn solve_density(
    low: f64,
    high: f64,
    diffusion: bool,
    horizon: f64,
    cells: usize,
    frames: usize,
) -> Result<DensityFrames, JsError> {
    let r_max = 2.5 * high;
    let grid = RadiusGrid::new(1e-3 * r_max, r_max, cells).map_err(js)?;
    let initial = InitialProfile::Bump { low, high }
        .discretize(&grid)
        .map_err(js)?;
    let regime = if diffusion {
        KineticRegime::Diffusion
    } else {
        KineticRegime::Reaction
    };
    let frames = frames.max(1);
    let times: Vec<f64> = (1..=frames)
        .map(|k| horizon * k as f64 / frames as f64)
        .collect();
    let traj = solve(&initial, regime, horizon, &times, &PdeConfig::default()).map_err(js)?;
    Ok(DensityFrames {
        centers: grid.centers.clone(),
        times: traj.times.clone(),
        values: traj
            .snapshots
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .collect(),
        u_bar: traj.records.iter().map(|r| r.u_bar).collect(),
    })
}

/// `|zeta - u_bar|` on a `resolution x resolution` grid of the plane
/// `z = const`, row-major in `y`; points inside a particle are NaN.
#[wasm_bindgen(js_name = fieldSlice)]
pub fn field_slice(
    delta: f64,
    alpha: f64,
    mean: f64,
    amplitude: f64,
    z: f64,
    resolution: usize,
) -> Result<Vec<f64>, JsError> {
    let system = lattice_system(
        delta,
        alpha,
        &RadiusDistribution::Profile { mean, amplitude },
        0,
    )?;
    let u = system.mean_field().map_err(js)?.u_bar;
    let h = 1.0 / resolution as f64;
    let points: Vec<[f64; 3]> = (0..resolution * resolution)
        .map(|k| {
            [
                ((k % resolution) as f64 + 0.5) * h,
                ((k / resolution) as f64 + 0.5) * h,
                z,
            ]
        })
        .collect();
    Ok(sample_field(&system, u, &points)
        .into_iter()
        .map(|s| s.map_or(f64::NAN, |s| s.deviation))
        .collect())
}
