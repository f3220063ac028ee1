//! Physical constants and the relativistic energy-momentum relation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex field value used for ψ, φ and χ.
pub type ComplexAmplitude = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitsError {
    #[error("{name} must be finite and strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// The three constants entering every equation: ħ, c and the particle mass m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub hbar: f64,
    pub c: f64,
    pub m: f64,
}

impl Units {
    pub fn new(hbar: f64, c: f64, m: f64) -> Result<Self, UnitsError> {
        let units = Units { hbar, c, m };
        units.validate()?;
        Ok(units)
    }

    /// Checks the positivity invariant; useful after deserialization.
    pub fn validate(&self) -> Result<(), UnitsError> {
        for (name, value) in [("hbar", self.hbar), ("c", self.c), ("m", self.m)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(UnitsError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Rest energy mc².
    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }

    /// Compton momentum mc.
    pub fn compton_momentum(&self) -> f64 {
        self.m * self.c
    }

    /// Free dispersion E(p) = +√(p²c² + m²c⁴).
    pub fn free_energy(&self, p: f64) -> f64 {
        let pc = p * self.c;
        let mc2 = self.rest_energy();
        (pc * pc + mc2 * mc2).sqrt()
    }

    /// Group velocity dE/dp = pc²/E of the free dispersion.
    pub fn group_velocity(&self, p: f64) -> f64 {
        p * self.c * self.c / self.free_energy(p)
    }
}

impl Default for Units {
    fn default() -> Self {
        natural_units()
    }
}

/// ħ = c = m = 1.
pub fn natural_units() -> Units {
    Units {
        hbar: 1.0,
        c: 1.0,
        m: 1.0,
    }
}

/// Principal square root of (E − V)²/c² − m²c².
///
/// Real and non-negative when |E − V| ≥ mc², otherwise purely imaginary with
/// positive imaginary part. The physical sign of the momentum is chosen by the
/// caller.
pub fn momentum_from_energy(energy: f64, potential: f64, units: &Units) -> Complex64 {
    let kinetic = (energy - potential) / units.c;
    let mc = units.compton_momentum();
    // (k - mc)(k + mc) loses less precision than k² - (mc)² near threshold
    let arg = (kinetic - mc) * (kinetic + mc);
    if arg >= 0.0 {
        Complex64::new(arg.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-arg).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn natural_units_are_unity() {
        let u = natural_units();
        assert_eq!((u.hbar, u.c, u.m), (1.0, 1.0, 1.0));
        assert_eq!(u.rest_energy(), 1.0);
        assert_eq!(u.compton_momentum(), 1.0);
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(Units::new(0.0, 1.0, 1.0).is_err());
        assert!(Units::new(1.0, -1.0, 1.0).is_err());
        assert!(Units::new(1.0, 1.0, f64::NAN).is_err());
        assert!(Units::new(1.0, 2.0, 3.0).is_ok());
    }

    #[test]
    fn momentum_examples() {
        let u = natural_units();
        let p = momentum_from_energy(1.25, 0.0, &u);
        assert!((p.re - 0.75).abs() < 1e-15 && p.im == 0.0);

        let p = momentum_from_energy(1.25, 3.0, &u);
        assert!((p.re - 2.0625f64.sqrt()).abs() < 1e-15 && p.im == 0.0);
        assert!((p.re - 1.43614).abs() < 1e-5);

        let p = momentum_from_energy(1.25, 1.0, &u);
        assert_eq!(p.re, 0.0);
        assert!((p.im - 0.9375f64.sqrt()).abs() < 1e-15);
        assert!((p.im - 0.96825).abs() < 1e-5);
    }

    #[test]
    fn threshold_gives_zero_momentum() {
        let u = natural_units();
        assert_eq!(momentum_from_energy(2.0, 1.0, &u), Complex64::new(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn mass_shell_holds(
            e in prop_oneof![1.0001f64..50.0, -50.0f64..-1.0001],
            c in 0.1f64..10.0,
            m in 0.1f64..10.0,
        ) {
            let u = Units::new(1.0, c, m).unwrap();
            let energy = e * u.rest_energy();
            let p = momentum_from_energy(energy, 0.0, &u);
            prop_assert_eq!(p.im, 0.0);
            let lhs = p.re * p.re + u.compton_momentum().powi(2);
            let rhs = (energy / c).powi(2);
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
        }
    }
}
