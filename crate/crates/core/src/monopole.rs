//! Monopole approximation of the chemical potential,
//!
//! ```text
//! zeta(x) = u + sum_j [d R_j / (1 + d R_j)] (1 - u R_j) d / |x - x_j|,   d = delta^alpha
//! ```
//!
//! evaluated over particles placed on a (possibly jittered) lattice in the
//! unit cube, together with the defect measurements used to check its
//! distance from the mean field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::CoreError;
use crate::system::{distance, ParticleSystem, Point3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point lies inside particle {index} (distance {distance} < radius {radius})")]
    InsideParticle {
        index: usize,
        distance: f64,
        radius: f64,
    },
    #[error("lattice needs {required} centers, budget is {budget}")]
    Capacity { required: u64, budget: u64 },
    #[error("particle {0} is not active")]
    InactiveParticle(usize),
    #[error(
        "found only {accepted} exterior points in {tries} tries; particle volume fraction too high"
    )]
    SamplingExhausted { tries: usize, accepted: usize },
    #[error("invalid field parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub delta: f64,
    /// Displacement amplitude as a fraction of `delta`, below 1/2.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default = "LatticeConfig::default_budget")]
    pub max_centers: u64,
}

impl LatticeConfig {
    fn default_budget() -> u64 {
        1 << 22
    }

    pub fn new(delta: f64, jitter: f64) -> Self {
        Self {
            delta,
            jitter,
            max_centers: Self::default_budget(),
        }
    }

    /// Lattice points per axis: cells `[k delta, (k+1) delta]` inside `[0, 1]`.
    pub fn per_axis(&self) -> u64 {
        (1.0 / self.delta + 1e-9).floor() as u64
    }

    pub fn count(&self) -> u64 {
        self.per_axis().pow(3)
    }
}

/// Centers `(k + 1/2) delta` of the lattice cells inside the unit cube, each
/// displaced by `jitter delta U[-1, 1]^3`.
pub fn place_lattice(config: &LatticeConfig, seed: u64) -> Result<Vec<Point3>, FieldError> {
    let LatticeConfig { delta, jitter, .. } = *config;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(FieldError::InvalidParameters(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(FieldError::InvalidParameters(format!(
            "jitter must lie in [0, 1/2), got {jitter}"
        )));
    }
    let required = config.count();
    if required > config.max_centers {
        return Err(FieldError::Capacity {
            required,
            budget: config.max_centers,
        });
    }
    let m = config.per_axis() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut p = [i, j, k].map(|n| (n as f64 + 0.5) * delta);
                if jitter > 0.0 {
                    for c in &mut p {
                        *c += jitter * delta * rng.random_range(-1.0..=1.0);
                    }
                }
                centers.push(p);
            }
        }
    }
    Ok(centers)
}

/// Field value at a point outside every particle ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub point: Point3,
    pub value: f64,
    pub deviation: f64,
}

/// Active particles reduced to what the field needs.
struct Monopoles {
    centers: Vec<Point3>,
    /// `d^2 R / (1 + d R) (1 - u R)`
    coefficients: Vec<f64>,
    /// Ball radii `d R`.
    balls: Vec<f64>,
    indices: Vec<usize>,
}

impl Monopoles {
    fn new(system: &ParticleSystem, u_bar: f64) -> Self {
        let da = system.delta_alpha();
        let mut m = Monopoles {
            centers: Vec::new(),
            coefficients: Vec::new(),
            balls: Vec::new(),
            indices: Vec::new(),
        };
        for (i, (&r, &a)) in system.radii.iter().zip(&system.active).enumerate() {
            if a {
                m.centers.push(system.centers[i]);
                m.coefficients
                    .push(da * da * r / (1.0 + da * r) * (1.0 - u_bar * r));
                m.balls.push(da * r);
                m.indices.push(i);
            }
        }
        m
    }

    fn containing(&self, x: &Point3) -> Option<(usize, f64, f64)> {
        self.centers
            .iter()
            .zip(&self.balls)
            .enumerate()
            .find_map(|(k, (c, &b))| {
                let d = distance(x, c);
                (d < b).then_some((self.indices[k], d, b))
            })
    }

    /// Monopole sum, optionally leaving out one active slot.
    fn sum(&self, x: &Point3, skip: Option<usize>) -> f64 {
        let mut s = 0.0;
        for (k, (c, &a)) in self.centers.iter().zip(&self.coefficients).enumerate() {
            if Some(k) != skip {
                s += a / distance(x, c);
            }
        }
        s
    }
}

/// `zeta(x)` at a point outside every particle ball; exact sum over active
/// particles.
pub fn evaluate_zeta(
    system: &ParticleSystem,
    u_bar: f64,
    point: &Point3,
) -> Result<f64, FieldError> {
    let m = Monopoles::new(system, u_bar);
    if let Some((index, distance, radius)) = m.containing(point) {
        return Err(FieldError::InsideParticle {
            index,
            distance,
            radius,
        });
    }
    Ok(u_bar + m.sum(point, None))
}

/// The 26 unit vectors along the axes, face diagonals and body diagonals.
pub fn default_directions() -> Vec<Point3> {
    let mut dirs = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) == (0, 0, 0) {
                    continue;
                }
                let n = ((i * i + j * j + k * k) as f64).sqrt();
                dirs.push([i as f64 / n, j as f64 / n, k as f64 / n]);
            }
        }
    }
    dirs
}

/// Largest contribution of the other particles to `zeta` on the surface of
/// particle `particle`, over the 26 default directions.
pub fn boundary_defect(
    system: &ParticleSystem,
    u_bar: f64,
    particle: usize,
) -> Result<f64, FieldError> {
    boundary_defect_with(system, u_bar, particle, &default_directions())
}

pub fn boundary_defect_with(
    system: &ParticleSystem,
    u_bar: f64,
    particle: usize,
    directions: &[Point3],
) -> Result<f64, FieldError> {
    if particle >= system.len() || !system.active[particle] {
        return Err(FieldError::InactiveParticle(particle));
    }
    let m = Monopoles::new(system, u_bar);
    let slot = m
        .indices
        .iter()
        .position(|&i| i == particle)
        .expect("active particle has a slot");
    Ok(defect_at(&m, slot, directions))
}

fn defect_at(m: &Monopoles, slot: usize, directions: &[Point3]) -> f64 {
    let c = m.centers[slot];
    let b = m.balls[slot];
    directions
        .iter()
        .map(|d| {
            let x = [c[0] + b * d[0], c[1] + b * d[1], c[2] + b * d[2]];
            m.sum(&x, Some(slot)).abs()
        })
        .fold(0.0, f64::max)
}

/// Maximum of [`boundary_defect`] over at most `max_particles` active
/// particles taken at an even stride.
pub fn max_boundary_defect(
    system: &ParticleSystem,
    u_bar: f64,
    max_particles: usize,
) -> Result<f64, FieldError> {
    if system.is_extinct() {
        return Err(CoreError::Extinct.into());
    }
    let m = Monopoles::new(system, u_bar);
    let n = m.centers.len();
    let stride = n.div_ceil(max_particles.max(1));
    let slots: Vec<usize> = (0..n).step_by(stride).collect();
    let dirs = default_directions();
    let values = par_map(&slots, |&s| defect_at(&m, s, &dirs));
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyReport {
    pub samples: usize,
    pub tries: usize,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    /// `delta^gamma (1 + 2 sup R) (1 + u sup R)`
    pub envelope: f64,
    pub worst: FieldSample,
}

/// `|zeta - u|` at `sample_count` quasi-random exterior points of the unit cube.
///
/// Points come from a Halton sequence in bases 2, 3, 5 with a seeded random
/// shift modulo 1; points inside a particle are skipped. Fails after
/// `20 sample_count + 100` candidates.
pub fn deviation_survey(
    system: &ParticleSystem,
    u_bar: f64,
    sample_count: usize,
    seed: u64,
) -> Result<SurveyReport, FieldError> {
    if sample_count == 0 {
        return Err(FieldError::InvalidParameters(
            "sample_count must be at least 1".into(),
        ));
    }
    if system.is_extinct() {
        return Err(CoreError::Extinct.into());
    }
    let m = Monopoles::new(system, u_bar);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    let max_tries = 20 * sample_count + 100;
    let mut points = Vec::with_capacity(sample_count);
    let mut tries = 0;
    while points.len() < sample_count {
        if tries == max_tries {
            return Err(FieldError::SamplingExhausted {
                tries,
                accepted: points.len(),
            });
        }
        tries += 1;
        let h = [halton(tries, 2), halton(tries, 3), halton(tries, 5)];
        let p = [0, 1, 2].map(|k| (h[k] + shift[k]).fract());
        if m.containing(&p).is_none() {
            points.push(p);
        }
    }
    let samples = par_map(&points, |p| {
        let value = u_bar + m.sum(p, None);
        FieldSample {
            point: *p,
            value,
            deviation: (value - u_bar).abs(),
        }
    });
    let worst = *samples
        .iter()
        .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
        .expect("at least one sample");
    let mean = samples.iter().map(|s| s.deviation).sum::<f64>() / samples.len() as f64;
    let sup_r = system.max_radius();
    let envelope = system.scale.delta_gamma() * (1.0 + 2.0 * sup_r) * (1.0 + u_bar * sup_r);
    Ok(SurveyReport {
        samples: samples.len(),
        tries,
        max_deviation: worst.deviation,
        mean_deviation: mean,
        envelope,
        worst,
    })
}

/// `zeta` on a list of points; points inside a particle give `None`.
pub fn sample_field(
    system: &ParticleSystem,
    u_bar: f64,
    points: &[Point3],
) -> Vec<Option<FieldSample>> {
    let m = Monopoles::new(system, u_bar);
    par_map(points, |p| {
        m.containing(p).is_none().then(|| {
            let value = u_bar + m.sum(p, None);
            FieldSample {
                point: *p,
                value,
                deviation: (value - u_bar).abs(),
            }
        })
    })
}

/// Radical inverse of `index` in `base`.
fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}
