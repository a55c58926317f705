//! Shot-noise-normalized quadrature variances.
//!
//! Every variance in this crate is expressed relative to the vacuum
//! (shot-noise) level, so `1.0` linear / `0 dB` is the reference. Decibels
//! are power decibels, `10·log10`.

use std::fmt;

use crate::error::{Error, Result};

/// Converts a power ratio in decibels to a linear ratio, `10^(db/10)`.
pub fn db_to_linear(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::invalid(format!("decibel value must be finite, got {db}")));
    }
    Ok(10f64.powf(db / 10.0))
}

/// Converts a positive linear power ratio to decibels.
pub fn linear_to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!(
            "variance ratio must be positive and finite, got {v}"
        )));
    }
    Ok(10.0 * v.log10())
}

/// A quadrature variance normalized to shot noise.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    /// The vacuum (shot-noise) reference.
    pub const SHOT_NOISE: NoiseLevel = NoiseLevel(1.0);

    pub fn from_linear(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Domain(format!(
                "noise level must be positive and finite, got {value}"
            )));
        }
        Ok(NoiseLevel(value))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_linear(db_to_linear(db)?)
    }

    #[inline]
    pub fn linear(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} dB", self.db())
    }
}

/// Squeezed and anti-squeezed variances of a Gaussian state at one sideband
/// frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraturePair {
    squeezed: NoiseLevel,
    antisqueezed: NoiseLevel,
}

/// Slack on the uncertainty product, absorbs rounding in derived pairs.
const UNCERTAINTY_SLACK: f64 = 1e-9;

impl QuadraturePair {
    pub fn new(squeezed: NoiseLevel, antisqueezed: NoiseLevel) -> Result<Self> {
        let (s, a) = (squeezed.linear(), antisqueezed.linear());
        if s > a {
            return Err(Error::invalid(format!(
                "squeezed variance {s} exceeds anti-squeezed variance {a}"
            )));
        }
        if s * a < 1.0 - UNCERTAINTY_SLACK {
            return Err(Error::Domain(format!(
                "variance product {} violates the uncertainty bound",
                s * a
            )));
        }
        Ok(QuadraturePair {
            squeezed,
            antisqueezed,
        })
    }

    pub fn from_linear(squeezed: f64, antisqueezed: f64) -> Result<Self> {
        Self::new(
            NoiseLevel::from_linear(squeezed)?,
            NoiseLevel::from_linear(antisqueezed)?,
        )
    }

    pub fn from_db(squeezed_db: f64, antisqueezed_db: f64) -> Result<Self> {
        Self::new(
            NoiseLevel::from_db(squeezed_db)?,
            NoiseLevel::from_db(antisqueezed_db)?,
        )
    }

    /// Vacuum input: both quadratures at shot noise.
    pub fn vacuum() -> Self {
        QuadraturePair {
            squeezed: NoiseLevel::SHOT_NOISE,
            antisqueezed: NoiseLevel::SHOT_NOISE,
        }
    }

    /// Pure squeezed vacuum with squeezed variance `v` and anti-squeezed `1/v`.
    pub fn pure(v: f64) -> Result<Self> {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Domain(format!(
                "pure-state squeezed variance must lie in (0, 1], got {v}"
            )));
        }
        Self::from_linear(v, 1.0 / v)
    }

    #[inline]
    pub fn squeezed(&self) -> NoiseLevel {
        self.squeezed
    }

    #[inline]
    pub fn antisqueezed(&self) -> NoiseLevel {
        self.antisqueezed
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.squeezed.linear() * self.antisqueezed.linear()
    }

    /// Variance of the quadrature at angle `theta` from the squeezed one,
    /// `V(θ) = S⁻·cos²θ + S⁺·sin²θ`.
    pub fn variance_at_phase(&self, theta: f64) -> NoiseLevel {
        let (s, c) = theta.sin_cos();
        NoiseLevel(self.squeezed.linear() * c * c + self.antisqueezed.linear() * s * s)
    }

    /// Builds a pair without checking invariants. Callers guarantee them.
    pub(crate) fn from_linear_unchecked(squeezed: f64, antisqueezed: f64) -> Self {
        debug_assert!(squeezed > 0.0 && antisqueezed > 0.0);
        QuadraturePair {
            squeezed: NoiseLevel(squeezed),
            antisqueezed: NoiseLevel(antisqueezed),
        }
    }
}

/// Free-function form of [`QuadraturePair::variance_at_phase`].
pub fn quadrature_variance_at_phase(pair: &QuadraturePair, theta: f64) -> NoiseLevel {
    pair.variance_at_phase(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(0.0).unwrap(), 1.0);
        assert_relative_eq!(db_to_linear(10.0).unwrap(), 10.0, epsilon = 1e-12);
        assert!((db_to_linear(-5.55).unwrap() - 0.27861).abs() < 1e-5);
        assert_eq!(linear_to_db(1.0).unwrap(), 0.0);
        assert!((linear_to_db(0.27861).unwrap() + 5.55).abs() < 1e-3);
        assert!((linear_to_db(62.23).unwrap() - 17.94).abs() < 1e-3);
    }

    #[test]
    fn conversion_errors() {
        assert!(matches!(db_to_linear(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(matches!(db_to_linear(f64::INFINITY), Err(Error::InvalidArgument(_))));
        assert!(matches!(linear_to_db(0.0), Err(Error::Domain(_))));
        assert!(matches!(linear_to_db(-1.0), Err(Error::Domain(_))));
        assert!(NoiseLevel::from_linear(0.0).is_err());
    }

    #[test]
    fn pair_invariants() {
        assert!(QuadraturePair::from_linear(2.0, 1.0).is_err());
        assert!(QuadraturePair::from_linear(0.5, 1.5).is_err());
        assert!(QuadraturePair::from_db(-3.0, 3.0).is_ok());
        assert!(QuadraturePair::pure(0.0).is_err());
    }

    #[test]
    fn phase_scan_values() {
        let pair = QuadraturePair::from_linear(0.2786, 62.23).unwrap();
        assert_relative_eq!(pair.variance_at_phase(0.0).linear(), 0.2786, epsilon = 1e-12);
        assert_relative_eq!(pair.variance_at_phase(PI / 2.0).linear(), 62.23, epsilon = 1e-9);
        assert!((pair.variance_at_phase(FRAC_PI_4).linear() - 31.254).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -60.0f64..60.0) {
            let back = linear_to_db(db_to_linear(db).unwrap()).unwrap();
            prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1e-3));
        }

        #[test]
        fn db_to_linear_is_monotone(a in -60.0f64..60.0, d in 1e-6f64..10.0) {
            prop_assert!(db_to_linear(a + d).unwrap() > db_to_linear(a).unwrap());
        }

        #[test]
        fn phase_variance_periodic_and_bounded(
            s in 0.01f64..1.0, k in 1.0f64..50.0, theta in -10.0f64..10.0
        ) {
            let pair = QuadraturePair::from_linear(s, k / s).unwrap();
            let v = pair.variance_at_phase(theta).linear();
            let w = pair.variance_at_phase(theta + PI).linear();
            prop_assert!((v - w).abs() <= 1e-9 * v);
            prop_assert!(v >= s * (1.0 - 1e-12));
            prop_assert!(v <= (k / s) * (1.0 + 1e-12));
        }
    }
}
