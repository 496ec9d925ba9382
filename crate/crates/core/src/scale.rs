//! Small-parameter bookkeeping: particle spacing `delta`, size exponent
//! `alpha`, and the derived rate exponent `gamma`.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Default slack in the rate exponent `2 alpha - 3 - epsilon`.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Rate exponent with `delta^gamma = max(delta^alpha, delta^(2 alpha - 3), delta^(2 alpha - 3 - epsilon))`.
///
/// For `delta < 1` the largest power is the one with the smallest exponent,
/// so this is `min(alpha, 2 alpha - 3, 2 alpha - 3 - epsilon)`.
pub fn derive_gamma(delta: f64, alpha: f64, epsilon: f64) -> Result<f64, CoreError> {
    check_delta(delta)?;
    if !(epsilon > 0.0) {
        return Err(CoreError::InvalidEpsilon(epsilon));
    }
    if !(alpha > 1.5 + epsilon) {
        return Err(CoreError::AlphaOutOfRegime { alpha, epsilon });
    }
    Ok(gamma_unchecked(alpha, epsilon))
}

fn gamma_unchecked(alpha: f64, epsilon: f64) -> f64 {
    alpha
        .min(2.0 * alpha - 3.0)
        .min(2.0 * alpha - 3.0 - epsilon)
}

fn check_delta(delta: f64) -> Result<(), CoreError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(CoreError::InvalidDelta(delta))
    }
}

/// Spacing and size exponents of a particle configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParameters {
    pub delta: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl ScaleParameters {
    /// Parameters inside the admissible regime `alpha > 3/2 + epsilon`.
    pub fn new(delta: f64, alpha: f64, epsilon: f64) -> Result<Self, CoreError> {
        let gamma = derive_gamma(delta, alpha, epsilon)?;
        Ok(Self {
            delta,
            alpha,
            epsilon,
            gamma,
        })
    }

    pub fn with_default_epsilon(delta: f64, alpha: f64) -> Result<Self, CoreError> {
        Self::new(delta, alpha, DEFAULT_EPSILON)
    }

    /// The `delta -> 0` dynamics: `delta` is the smallest normal float, so
    /// `delta^alpha` is exactly zero and the growth law reduces to
    /// `u_bar - 1/R`.
    pub fn limit(alpha: f64) -> Result<Self, CoreError> {
        Self::new(f64::MIN_POSITIVE, alpha, DEFAULT_EPSILON)
    }

    /// Skips the `alpha > 3/2 + epsilon` gate. Only meant for experiments
    /// probing the regime boundary; `gamma` may then be zero or negative.
    pub fn diagnostics_only(delta: f64, alpha: f64, epsilon: f64) -> Result<Self, CoreError> {
        check_delta(delta)?;
        if !(epsilon > 0.0) {
            return Err(CoreError::InvalidEpsilon(epsilon));
        }
        if !(alpha > 0.0) {
            return Err(CoreError::AlphaOutOfRegime { alpha, epsilon });
        }
        Ok(Self {
            delta,
            alpha,
            epsilon,
            gamma: gamma_unchecked(alpha, epsilon),
        })
    }

    /// `delta^alpha`, the physical-to-rescaled radius factor.
    pub fn delta_alpha(&self) -> f64 {
        self.delta.powf(self.alpha)
    }

    pub fn delta_gamma(&self) -> f64 {
        self.delta.powf(self.gamma)
    }

    pub fn in_regime(&self) -> bool {
        self.alpha > 1.5 + self.epsilon
    }

    /// `N_i delta^alpha`; governs the diffusion-controlled limit.
    pub fn capacity_density(&self, initial_count: usize) -> f64 {
        initial_count as f64 * self.delta_alpha()
    }

    /// `N_i delta^(2 alpha)`; must vanish for the reaction-controlled mean field.
    pub fn surface_area_density(&self, initial_count: usize) -> f64 {
        initial_count as f64 * self.delta.powf(2.0 * self.alpha)
    }
}
