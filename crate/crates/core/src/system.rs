//! State of the N-particle system and its conserved/dissipated aggregates.

use std::sync::Arc;

use crate::error::CoreError;
use crate::mean_field::{mean_field, rate, MeanFieldState};
use crate::scale::ScaleParameters;

pub type Point3 = [f64; 3];

#[inline]
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Rescaled radii `R_i` at fixed centers `x_i`. An extinct particle keeps its
/// slot with radius exactly zero and a recorded extinction time.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub scale: ScaleParameters,
    pub radii: Vec<f64>,
    /// Shared between snapshots; centers never move.
    pub centers: Arc<[Point3]>,
    pub active: Vec<bool>,
    pub extinction_times: Vec<Option<f64>>,
    pub initial_count: usize,
    /// Rescaled time `t / delta^(2 alpha)`.
    pub time: f64,
}

impl ParticleSystem {
    /// Zero radii are accepted and mark particles that are already inactive.
    pub fn new(
        scale: ScaleParameters,
        radii: Vec<f64>,
        centers: impl Into<Arc<[Point3]>>,
    ) -> Result<Self, CoreError> {
        let centers = centers.into();
        if radii.len() != centers.len() {
            return Err(CoreError::InvalidSystem(format!(
                "{} radii for {} centers",
                radii.len(),
                centers.len()
            )));
        }
        if let Some(r) = radii.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(CoreError::InvalidSystem(format!("invalid radius {r}")));
        }
        let active = radii.iter().map(|&r| r > 0.0).collect();
        let n = radii.len();
        Ok(Self {
            scale,
            radii,
            centers,
            active,
            extinction_times: vec![None; n],
            initial_count: n,
            time: 0.0,
        })
    }

    /// Places particles along a line with unit spacing; for tests and
    /// experiments where positions are irrelevant to the dynamics.
    pub fn unplaced(scale: ScaleParameters, radii: Vec<f64>) -> Result<Self, CoreError> {
        let centers: Vec<Point3> = (0..radii.len()).map(|i| [i as f64, 0.0, 0.0]).collect();
        Self::new(scale, radii, centers)
    }

    pub fn delta_alpha(&self) -> f64 {
        self.scale.delta_alpha()
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn is_extinct(&self) -> bool {
        self.active_count() == 0
    }

    pub fn active_radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.radii
            .iter()
            .zip(&self.active)
            .filter_map(|(&r, &a)| a.then_some(r))
    }

    pub fn mean_field(&self) -> Result<MeanFieldState, CoreError> {
        mean_field(&self.radii, self.delta_alpha())
    }

    pub fn volume(&self) -> f64 {
        self.active_radii().map(|r| r * r * r).sum()
    }

    pub fn surface(&self) -> f64 {
        self.active_radii().map(|r| r * r).sum()
    }

    pub fn max_radius(&self) -> f64 {
        self.active_radii().fold(0.0, f64::max)
    }

    pub fn min_active_radius(&self) -> Option<f64> {
        self.active_radii().reduce(f64::min)
    }

    /// Marks particle `index` extinct at `time`.
    pub fn extinguish(&mut self, index: usize, time: f64) {
        self.radii[index] = 0.0;
        self.active[index] = false;
        self.extinction_times[index] = Some(time);
    }

    /// Fails if any initial radius exceeds the uniform bound `r0`.
    pub fn check_radius_bound(&self, r0: f64) -> Result<(), CoreError> {
        match self.radii.iter().find(|&&r| r > r0) {
            Some(r) => Err(CoreError::InvalidSystem(format!(
                "radius {r} exceeds the bound R_0 = {r0}"
            ))),
            None => Ok(()),
        }
    }

    /// Smallest pairwise center distance (brute force).
    pub fn min_center_spacing(&self) -> f64 {
        let c = &self.centers;
        let mut best = f64::INFINITY;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                best = best.min(distance(&c[i], &c[j]));
            }
        }
        best
    }
}

/// Aggregates of a snapshot. Volumes and surfaces omit `4 pi / 3` and `4 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub total_volume: f64,
    pub total_surface: f64,
    /// `sum (R dR/dt + R^2 (dR/dt)^2)`; zero in the `delta^alpha = 0` limit,
    /// nonpositive otherwise.
    pub dissipation: f64,
    pub active_fraction: f64,
    pub u_bar: f64,
}

pub fn diagnostics(system: &ParticleSystem) -> Result<Diagnostics, CoreError> {
    let da = system.delta_alpha();
    let u = system.mean_field()?.u_bar;
    let mut volume = 0.0;
    let mut surface = 0.0;
    let mut dissipation = 0.0;
    for r in system.active_radii() {
        let v = rate(r, u, da);
        volume += r * r * r;
        surface += r * r;
        dissipation += r * v + r * r * v * v;
    }
    Ok(Diagnostics {
        total_volume: volume,
        total_surface: surface,
        dissipation,
        active_fraction: system.active_count() as f64 / system.initial_count.max(1) as f64,
        u_bar: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scale(delta: f64) -> ScaleParameters {
        ScaleParameters::with_default_epsilon(delta, 2.0).unwrap()
    }

    fn limit() -> ScaleParameters {
        ScaleParameters::limit(2.0).unwrap()
    }

    #[test]
    fn monodisperse_diagnostics() {
        let sys = ParticleSystem::unplaced(limit(), vec![1.0, 1.0]).unwrap();
        let d = diagnostics(&sys).unwrap();
        assert!(d.dissipation.abs() < 1e-15);
        assert_relative_eq!(d.total_volume, 2.0);
        assert_relative_eq!(d.total_surface, 2.0);
        assert_eq!(d.active_fraction, 1.0);
    }

    #[test]
    fn two_particle_dissipation_vanishes_without_drag() {
        let sys = ParticleSystem::unplaced(limit(), vec![1.0, 2.0]).unwrap();
        let d = diagnostics(&sys).unwrap();
        assert!(d.dissipation.abs() < 1e-15, "{}", d.dissipation);
    }

    #[test]
    fn two_particle_dissipation_is_negative_with_drag() {
        let s = ScaleParameters::new(0.1f64.sqrt(), 2.0, 0.01).unwrap();
        let sys = ParticleSystem::unplaced(s, vec![1.0, 2.0]).unwrap();
        assert_relative_eq!(sys.delta_alpha(), 0.1, max_relative = 1e-12);
        let d = diagnostics(&sys).unwrap();
        assert!(d.dissipation < 0.0);
    }

    #[test]
    fn extinct_particles_drop_out() {
        let mut sys = ParticleSystem::unplaced(scale(0.1), vec![1.0, 1.0, 2.0, 0.5]).unwrap();
        sys.extinguish(3, 0.7);
        assert_eq!(sys.active_count(), 3);
        assert_eq!(sys.extinction_times[3], Some(0.7));
        let d = diagnostics(&sys).unwrap();
        assert_relative_eq!(d.total_volume, 10.0);
        assert_relative_eq!(d.active_fraction, 0.75);
    }

    #[test]
    fn zero_radius_marks_inactive() {
        let sys = ParticleSystem::unplaced(scale(0.1), vec![1.0, 0.0]).unwrap();
        assert_eq!(sys.active, vec![true, false]);
        assert_eq!(sys.initial_count, 2);
    }

    #[test]
    fn rejects_mismatched_and_negative() {
        assert!(ParticleSystem::new(scale(0.1), vec![1.0], vec![[0.0; 3]; 2]).is_err());
        assert!(ParticleSystem::unplaced(scale(0.1), vec![-1.0]).is_err());
        assert!(ParticleSystem::unplaced(scale(0.1), vec![f64::NAN]).is_err());
    }

    #[test]
    fn extinct_system_has_no_diagnostics() {
        let sys = ParticleSystem::unplaced(scale(0.1), vec![0.0]).unwrap();
        assert_eq!(diagnostics(&sys), Err(CoreError::Extinct));
    }

    #[test]
    fn radius_bound() {
        let sys = ParticleSystem::unplaced(scale(0.1), vec![1.0, 2.5]).unwrap();
        assert!(sys.check_radius_bound(3.0).is_ok());
        assert!(sys.check_radius_bound(2.0).is_err());
    }
}
