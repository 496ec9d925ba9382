//! Closed-form mean field and single-particle growth law.
//!
//! With kinetic weight `c(R) = 1 / (1 + delta^alpha R)` an isolated particle
//! in a far field `u_bar` grows at `c(R) (u_bar - 1/R)`. Requiring the total
//! volume `sum R^3` to be stationary fixes
//!
//! ```text
//! u_bar = sum R c(R) / sum R^2 c(R)
//! ```
//!
//! i.e. `u_bar` is a weighted mean of `1/R` with weights `R^2 c(R)`.

use crate::error::CoreError;

/// Mean field together with the two weighted moments defining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    pub u_bar: f64,
    /// `sum R / (1 + delta^alpha R)`
    pub weighted_first_moment: f64,
    /// `sum R^2 / (1 + delta^alpha R)`
    pub weighted_second_moment: f64,
}

/// Mean field over the positive entries of `radii`; zero entries are extinct
/// particles and contribute nothing.
pub fn mean_field(radii: &[f64], delta_alpha: f64) -> Result<MeanFieldState, CoreError> {
    let (first, second) = weighted_moments(radii.iter().copied(), delta_alpha);
    if !(second > 0.0) {
        return Err(CoreError::Extinct);
    }
    Ok(MeanFieldState {
        u_bar: first / second,
        weighted_first_moment: first,
        weighted_second_moment: second,
    })
}

pub(crate) fn weighted_moments(radii: impl Iterator<Item = f64>, delta_alpha: f64) -> (f64, f64) {
    let mut first = 0.0;
    let mut second = 0.0;
    for r in radii.filter(|&r| r > 0.0) {
        let w = r / (1.0 + delta_alpha * r);
        first += w;
        second += w * r;
    }
    (first, second)
}

/// `dR/dt = (u_bar - 1/R) / (1 + delta^alpha R)`.
pub fn growth_rate(radius: f64, u_bar: f64, delta_alpha: f64) -> Result<f64, CoreError> {
    if !(radius > 0.0) {
        return Err(CoreError::NonPositiveRadius(radius));
    }
    Ok(rate(radius, u_bar, delta_alpha))
}

#[inline]
pub(crate) fn rate(radius: f64, u_bar: f64, delta_alpha: f64) -> f64 {
    (u_bar - 1.0 / radius) / (1.0 + delta_alpha * radius)
}

/// Reaction-controlled limit velocity `u_bar - 1/R`.
#[inline]
pub fn lsw_velocity(radius: f64, u_bar: f64) -> f64 {
    u_bar - 1.0 / radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn monodisperse_mean_field_is_inverse_radius() {
        for da in [0.0, 0.01, 0.3] {
            let m = mean_field(&[1.0, 1.0, 1.0], da).unwrap();
            assert_relative_eq!(m.u_bar, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_particle_mean_field() {
        assert_relative_eq!(
            mean_field(&[1.0, 2.0], 0.0).unwrap().u_bar,
            0.6,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            mean_field(&[1.0, 2.0], 0.1).unwrap().u_bar,
            17.0 / 28.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_radii_are_ignored() {
        let a = mean_field(&[1.0, 0.0, 2.0, 0.0], 0.1).unwrap();
        let b = mean_field(&[1.0, 2.0], 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extinct_system_has_no_mean_field() {
        assert_eq!(mean_field(&[0.0, 0.0], 0.0), Err(CoreError::Extinct));
        assert_eq!(mean_field(&[], 0.0), Err(CoreError::Extinct));
    }

    #[test]
    fn growth_rate_examples() {
        assert_eq!(growth_rate(1.0, 1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(growth_rate(2.0, 0.6, 0.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(
            growth_rate(2.0, 17.0 / 28.0, 0.1).unwrap(),
            5.0 / 56.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn growth_rate_rejects_extinct_particles() {
        assert_eq!(
            growth_rate(0.0, 1.0, 0.0),
            Err(CoreError::NonPositiveRadius(0.0))
        );
        assert!(growth_rate(-1.0, 1.0, 0.0).is_err());
    }

    fn radii_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.1f64..10.0, 1..64)
    }

    proptest! {
        #[test]
        fn volume_is_stationary(radii in radii_strategy(), da in prop::sample::select(vec![0.0, 0.01, 0.1])) {
            let u = mean_field(&radii, da).unwrap().u_bar;
            let (mut sum, mut scale) = (0.0, 0.0);
            for &r in &radii {
                sum += r * r * growth_rate(r, u, da).unwrap();
                // magnitude of the cancelling parts
                scale += r * (u.abs() * r + 1.0) / (1.0 + da * r);
            }
            prop_assert!(sum.abs() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn mean_field_sandwich(radii in radii_strategy(), da in 0.0f64..0.5) {
            let u = mean_field(&radii, da).unwrap().u_bar;
            let max = radii.iter().cloned().fold(f64::MIN, f64::max);
            let min = radii.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(u >= (1.0 / max) * (1.0 - 1e-14));
            prop_assert!(u <= (1.0 / min) * (1.0 + 1e-14));
        }
    }
}
