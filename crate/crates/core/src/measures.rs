//! Radius measures: empirical measures of particle snapshots, the
//! Wasserstein-1 distance to grid densities, and the weak-form residual of the
//! limit equation.

use serde::Serialize;
use thiserror::Error;

use crate::lsw_pde::{DensityTrajectory, KineticRegime, RadiusDensity};
use crate::particle_sim::Trajectory;
use crate::system::ParticleSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure has zero mass")]
    ZeroMass,
    #[error("test function support ends at t = {support}, beyond the horizon {horizon}")]
    SupportBeyondHorizon { support: f64, horizon: f64 },
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
}

/// `(1/N_i) sum_active delta_{R_j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    /// `(radius, weight)`, one per active particle, in particle order.
    pub atoms: Vec<(f64, f64)>,
    /// `N(t) / N_i`; zero for an extinct snapshot.
    pub total_weight: f64,
}

impl EmpiricalMeasure {
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms sorted by radius with equal radii combined.
    pub fn merged(&self) -> Vec<(f64, f64)> {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (r, w) in atoms {
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 += w,
                _ => out.push((r, w)),
            }
        }
        out
    }

    /// `int f dnu`.
    pub fn pair(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(r, w)| w * f(r)).sum()
    }
}

/// Empirical measure of the active particles of `system`, weights `1/N_i`.
pub fn empirical_from_snapshot(system: &ParticleSystem) -> EmpiricalMeasure {
    let w = 1.0 / system.initial_count as f64;
    let atoms: Vec<(f64, f64)> = system.active_radii().map(|r| (r, w)).collect();
    EmpiricalMeasure {
        total_weight: atoms.len() as f64 * w,
        atoms,
    }
}

/// Either kind of radius measure, for [`wasserstein1`].
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a> {
    Atomic(&'a EmpiricalMeasure),
    Density(&'a RadiusDensity),
}

impl<'a> From<&'a EmpiricalMeasure> for MeasureRef<'a> {
    fn from(m: &'a EmpiricalMeasure) -> Self {
        Self::Atomic(m)
    }
}

impl<'a> From<&'a RadiusDensity> for MeasureRef<'a> {
    fn from(d: &'a RadiusDensity) -> Self {
        Self::Density(d)
    }
}

/// Normalized CDF, piecewise linear between knots with jumps allowed at knots.
enum Cdf {
    /// Sorted positions with cumulative weight up to and including each.
    Steps { x: Vec<f64>, cum: Vec<f64> },
    /// Cell edges with the cumulative mass at each edge.
    Linear { edges: Vec<f64>, cum: Vec<f64> },
}

impl Cdf {
    fn new(m: MeasureRef<'_>) -> Result<Self, MeasureError> {
        match m {
            MeasureRef::Atomic(e) => {
                let atoms = e.merged();
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if !(total > 0.0) {
                    return Err(MeasureError::ZeroMass);
                }
                let mut acc = 0.0;
                let mut x = Vec::with_capacity(atoms.len());
                let mut cum = Vec::with_capacity(atoms.len());
                for (r, w) in atoms {
                    acc += w;
                    x.push(r);
                    cum.push(acc / total);
                }
                // the last atom closes the CDF exactly
                *cum.last_mut().expect("nonempty") = 1.0;
                Ok(Self::Steps { x, cum })
            }
            MeasureRef::Density(d) => {
                let total: f64 = d.values.iter().sum();
                if !(total > 0.0) {
                    return Err(MeasureError::ZeroMass);
                }
                let mut cum = Vec::with_capacity(d.values.len() + 1);
                cum.push(0.0);
                let mut acc = 0.0;
                for v in &d.values {
                    acc += v;
                    cum.push(acc / total);
                }
                *cum.last_mut().expect("nonempty") = 1.0;
                Ok(Self::Linear {
                    edges: d.grid.edges.clone(),
                    cum,
                })
            }
        }
    }

    fn knots(&self) -> &[f64] {
        match self {
            Self::Steps { x, .. } => x,
            Self::Linear { edges, .. } => edges,
        }
    }

    /// Limits `(F(a+), F(b-))` on an interval `[a, b]` free of interior knots.
    fn on(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            Self::Steps { x, cum } => {
                // number of atoms at or left of a
                let k = x.partition_point(|&p| p <= a);
                let v = if k == 0 { 0.0 } else { cum[k - 1] };
                (v, v)
            }
            Self::Linear { edges, cum } => (linear_at(edges, cum, a), linear_at(edges, cum, b)),
        }
    }
}

fn linear_at(edges: &[f64], cum: &[f64], x: f64) -> f64 {
    if x <= edges[0] {
        return 0.0;
    }
    if x >= edges[edges.len() - 1] {
        return 1.0;
    }
    let k = edges.partition_point(|&e| e <= x) - 1;
    let s = (x - edges[k]) / (edges[k + 1] - edges[k]);
    cum[k] + s * (cum[k + 1] - cum[k])
}

/// Exact `int_0^len |d0 + (d1 - d0) s / len| ds`.
fn abs_linear_integral(d0: f64, d1: f64, len: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * len * (d0.abs() + d1.abs())
    } else {
        0.5 * len * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// Wasserstein-1 distance between the normalized measures, as the exact `L1`
/// distance of their CDFs.
pub fn wasserstein1<'a, 'b>(
    a: impl Into<MeasureRef<'a>>,
    b: impl Into<MeasureRef<'b>>,
) -> Result<f64, MeasureError> {
    let fa = Cdf::new(a.into())?;
    let fb = Cdf::new(b.into())?;
    let mut knots: Vec<f64> = fa.knots().iter().chain(fb.knots()).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a0, a1) = fa.on(w[0], w[1]);
        let (b0, b1) = fb.on(w[0], w[1]);
        total += abs_linear_integral(a0 - b0, a1 - b1, w[1] - w[0]);
    }
    Ok(total)
}

/// `phi(t, R) = A b(t / T) c(R)` with `b(s) = (1 - s^2)^3` on `[0, 1)` and
/// `c` the same kernel rescaled to `(r_lo, r_hi)`. Twice continuously
/// differentiable, supported in `[0, T) x (r_lo, r_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub amplitude: f64,
    pub t_end: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

/// `(1 - s^2)^3` and its derivative, zero for `|s| >= 1`.
fn kernel(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    (q * q * q, -6.0 * s * q * q)
}

impl TestFunction {
    pub fn bump(t_end: f64, r_lo: f64, r_hi: f64) -> Result<Self, MeasureError> {
        if !(t_end > 0.0 && r_lo > 0.0 && r_hi > r_lo) {
            return Err(MeasureError::InvalidTestFunction(format!(
                "need t_end > 0 and 0 < r_lo < r_hi, got t_end = {t_end}, ({r_lo}, {r_hi})"
            )));
        }
        Ok(Self {
            amplitude: 1.0,
            t_end,
            r_lo,
            r_hi,
        })
    }

    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            t_end: f64::MIN_POSITIVE,
            r_lo: 1.0,
            r_hi: 2.0,
        }
    }

    fn time_part(&self, t: f64) -> (f64, f64) {
        if t < 0.0 {
            return (0.0, 0.0);
        }
        let (b, db) = kernel(t / self.t_end);
        (b, db / self.t_end)
    }

    fn radius_part(&self, r: f64) -> (f64, f64) {
        let half = 0.5 * (self.r_hi - self.r_lo);
        let (c, dc) = kernel((r - 0.5 * (self.r_lo + self.r_hi)) / half);
        (c, dc / half)
    }

    pub fn value(&self, t: f64, r: f64) -> f64 {
        self.amplitude * self.time_part(t).0 * self.radius_part(r).0
    }

    pub fn dt(&self, t: f64, r: f64) -> f64 {
        self.amplitude * self.time_part(t).1 * self.radius_part(r).0
    }

    pub fn dr(&self, t: f64, r: f64) -> f64 {
        self.amplitude * self.time_part(t).0 * self.radius_part(r).1
    }
}

/// A time series of (sub-probability) radius measures `a(t) nu_t`.
pub trait MeasureSeries {
    fn times(&self) -> &[f64];
    /// `int f d(a nu_t)` at snapshot `k`.
    fn pair(&self, k: usize, f: &dyn Fn(f64) -> f64) -> f64;
    fn regime(&self) -> KineticRegime {
        KineticRegime::Reaction
    }
    /// Mean field of the limit closure computed from the measure itself.
    fn closure(&self, k: usize) -> Option<f64> {
        let (num, den) = match self.regime() {
            KineticRegime::Reaction => (self.pair(k, &|r| r), self.pair(k, &|r| r * r)),
            KineticRegime::Diffusion => (self.pair(k, &|_| 1.0), self.pair(k, &|r| r)),
        };
        (den > 0.0).then(|| num / den)
    }
    fn active_fraction(&self, k: usize) -> f64 {
        self.pair(k, &|_| 1.0)
    }
}

impl MeasureSeries for Trajectory {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn pair(&self, k: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        let s = &self.snapshots[k];
        s.active_radii().map(f).sum::<f64>() / s.initial_count as f64
    }

    fn active_fraction(&self, k: usize) -> f64 {
        let s = &self.snapshots[k];
        s.active_count() as f64 / s.initial_count as f64
    }
}

impl MeasureSeries for DensityTrajectory {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn pair(&self, k: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        let d = &self.snapshots[k];
        let dr = d.grid.dr();
        d.grid
            .centers
            .iter()
            .zip(&d.values)
            .map(|(&r, &n)| f(r) * n)
            .sum::<f64>()
            * dr
            / self.initial_mass
    }

    fn regime(&self) -> KineticRegime {
        self.regime
    }

    fn active_fraction(&self, k: usize) -> f64 {
        self.snapshots[k].active_mass / self.initial_mass
    }
}

/// `| int_0^T int {phi_t + v(R, u) phi_R} d(a nu_t) dt + int phi(0, .) dnu_0 |`
/// with trapezoidal quadrature over the snapshot times.
pub fn weak_form_residual(
    series: &impl MeasureSeries,
    phi: &TestFunction,
) -> Result<f64, MeasureError> {
    let times = series.times();
    let horizon = times.last().copied().unwrap_or(0.0);
    if phi.amplitude == 0.0 {
        return Ok(0.0);
    }
    if phi.t_end > horizon * (1.0 + 1e-12) {
        return Err(MeasureError::SupportBeyondHorizon {
            support: phi.t_end,
            horizon,
        });
    }
    let regime = series.regime();
    let integrand = |k: usize| -> f64 {
        let t = times[k];
        if t >= phi.t_end {
            return 0.0;
        }
        match series.closure(k) {
            Some(u) => series.pair(k, &|r| phi.dt(t, r) + regime.velocity(r, u) * phi.dr(t, r)),
            None => 0.0,
        }
    };
    let mut total = 0.0;
    let mut prev = integrand(0);
    for k in 1..times.len() {
        if times[k - 1] >= phi.t_end {
            break;
        }
        let cur = integrand(k);
        total += 0.5 * (times[k] - times[k - 1]) * (prev + cur);
        prev = cur;
    }
    total += series.pair(0, &|r| phi.value(0.0, r));
    Ok(total.abs())
}

/// `(t, a(t))` per snapshot.
pub fn active_fraction_series(series: &impl MeasureSeries) -> Vec<(f64, f64)> {
    series
        .times()
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, series.active_fraction(k)))
        .collect()
}

/// Optimal transport cost `min sum |x - y| pi(x, y)` between two small
/// normalized atomic measures, by successive shortest paths on the bipartite
/// transport network. Cubic in the atom count; meant as a cross-check for
/// [`wasserstein1`].
pub fn transport_cost(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64, MeasureError> {
    let (ta, tb): (f64, f64) = (a.iter().map(|x| x.1).sum(), b.iter().map(|x| x.1).sum());
    if !(ta > 0.0 && tb > 0.0) {
        return Err(MeasureError::ZeroMass);
    }
    let (n, m) = (a.len(), b.len());
    let (source, sink) = (n + m, n + m + 1);
    let nodes = n + m + 2;
    // edge list with paired reverse edges at index ^ 1
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    let mut add = |u: usize, v: usize, c: f64, w: f64, to: &mut Vec<(usize, usize)>| {
        to.push((u, v));
        cap.push(c);
        cost.push(w);
        to.push((v, u));
        cap.push(0.0);
        cost.push(-w);
    };
    for (i, &(_, w)) in a.iter().enumerate() {
        add(source, i, w / ta, 0.0, &mut to);
    }
    for (j, &(_, w)) in b.iter().enumerate() {
        add(n + j, sink, w / tb, 0.0, &mut to);
    }
    for (i, &(x, _)) in a.iter().enumerate() {
        for (j, &(y, _)) in b.iter().enumerate() {
            add(i, n + j, f64::INFINITY, (x - y).abs(), &mut to);
        }
    }
    let mut total = 0.0;
    let mut remaining = 1.0f64;
    while remaining > 1e-15 {
        // Bellman-Ford on the residual network
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for (e, &(u, v)) in to.iter().enumerate() {
                if cap[e] > 1e-15 && dist[u] + cost[e] < dist[v] - 1e-15 {
                    dist[v] = dist[u] + cost[e];
                    via[v] = e;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut push = remaining;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(cap[e]);
            v = to[e].0;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            cap[e] -= push;
            cap[e ^ 1] += push;
            total += push * cost[e];
            v = to[e].0;
        }
        remaining -= push;
    }
    Ok(total)
}
