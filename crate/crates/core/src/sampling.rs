//! Seeded initial radius distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::system::Point3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RadiusDistribution {
    /// Independent draws from `U[low, high]`.
    Uniform { low: f64, high: f64 },
    /// Log-normal draws, rejected above `max`.
    Lognormal { mu: f64, sigma: f64, max: f64 },
    /// Fixed radii, assigned to centers in order.
    Explicit { radii: Vec<f64> },
    /// Deterministic macroscopic profile `mean + amplitude cos(pi x)` in the
    /// first center coordinate. Spatially correlated radii, so the monopole
    /// sum behaves like a Riemann sum of a nonzero density.
    Profile { mean: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("explicit list has {given} radii but {needed} centers are placed")]
    CountMismatch { given: usize, needed: usize },
}

impl RadiusDistribution {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let bad = |m: &str| Err(SamplingError::InvalidParameters(m.to_string()));
        match *self {
            Self::Uniform { low, high } if !(low > 0.0 && high > low) => {
                bad("uniform needs 0 < low < high")
            }
            Self::Lognormal { sigma, max, .. } if !(sigma > 0.0 && max > 0.0) => {
                bad("lognormal needs sigma > 0 and max > 0")
            }
            Self::Explicit { ref radii } if radii.iter().any(|r| !(*r > 0.0)) => {
                bad("explicit radii must be positive")
            }
            Self::Explicit { ref radii } if radii.is_empty() => bad("explicit radii list is empty"),
            Self::Profile { mean, amplitude } if !(amplitude.abs() < mean) => {
                bad("profile needs |amplitude| < mean")
            }
            _ => Ok(()),
        }
    }

    /// Upper bound `R_0` on every radius this distribution can produce.
    pub fn radius_bound(&self) -> f64 {
        match self {
            Self::Uniform { high, .. } => *high,
            Self::Lognormal { max, .. } => *max,
            Self::Explicit { radii } => radii.iter().cloned().fold(0.0, f64::max),
            Self::Profile { mean, amplitude } => mean + amplitude.abs(),
        }
    }

    /// Number of radii this distribution yields when `available` centers exist.
    pub fn count(&self, available: usize) -> usize {
        match self {
            Self::Explicit { radii } => radii.len(),
            _ => available,
        }
    }

    /// One radius per center; the same `(self, centers, seed)` always yields
    /// the same radii, and the first `k` draws do not depend on `centers.len()`.
    pub fn sample(&self, centers: &[Point3], seed: u64) -> Result<Vec<f64>, SamplingError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = centers.len();
        Ok(match self {
            Self::Uniform { low, high } => (0..n).map(|_| rng.random_range(*low..=*high)).collect(),
            Self::Lognormal { mu, sigma, max } => {
                let dist = LogNormal::new(*mu, *sigma)
                    .map_err(|e| SamplingError::InvalidParameters(e.to_string()))?;
                (0..n)
                    .map(|_| loop {
                        let r = dist.sample(&mut rng);
                        if r <= *max {
                            break r;
                        }
                    })
                    .collect()
            }
            Self::Explicit { radii } => {
                if radii.len() != n {
                    return Err(SamplingError::CountMismatch {
                        given: radii.len(),
                        needed: n,
                    });
                }
                radii.clone()
            }
            Self::Profile { mean, amplitude } => centers
                .iter()
                .map(|c| mean + amplitude * (std::f64::consts::PI * c[0]).cos())
                .collect(),
        })
    }
}
