//! Physical constants and the unit convention (SI throughout).

use crate::error::{Error, Result};

/// Planck constant, exact SI value (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge, exact SI value (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Zero-flux line speed used by the worked examples (m/s).
pub const DEFAULT_LIGHT_SPEED: f64 = 1.0e8;

/// The constants every other module reads from.
///
/// `φ₀` and `R_Q` are always derived from `h` and `e`, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    planck: f64,
    charge: f64,
    light_speed: f64,
}

impl PhysicalConstants {
    pub fn new(planck: f64, charge: f64, light_speed: f64) -> Result<Self> {
        for (name, value) in [
            ("planck", planck),
            ("elementary charge", charge),
            ("c_base", light_speed),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        Ok(Self {
            planck,
            charge,
            light_speed,
        })
    }

    /// Exact `h` and `e` with a custom flat-line speed.
    pub fn with_light_speed(light_speed: f64) -> Result<Self> {
        Self::new(PLANCK, ELEMENTARY_CHARGE, light_speed)
    }

    #[inline]
    pub fn planck(&self) -> f64 {
        self.planck
    }

    #[inline]
    pub fn elementary_charge(&self) -> f64 {
        self.charge
    }

    /// `c_base`, the line speed in the absence of external flux.
    #[inline]
    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    /// `φ₀ = h / 2e` in Wb.
    #[inline]
    pub fn flux_quantum(&self) -> f64 {
        self.planck / (2.0 * self.charge)
    }

    /// `R_Q = h / 4e²` in Ω.
    #[inline]
    pub fn resistance_quantum(&self) -> f64 {
        self.planck / (4.0 * self.charge * self.charge)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        default_constants()
    }
}

/// Exact SI `h`, `e` and `c_base = 1e8 m/s`.
pub fn default_constants() -> PhysicalConstants {
    PhysicalConstants {
        planck: PLANCK,
        charge: ELEMENTARY_CHARGE,
        light_speed: DEFAULT_LIGHT_SPEED,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn derived_quanta_match_high_precision_values() {
        let k = default_constants();
        // mpmath, 40 digits
        assert!(rel(k.flux_quantum(), 2.067_833_848_461_929_3e-15) < 1e-15);
        assert!(rel(k.resistance_quantum(), 6_453.201_864_826_127) < 1e-15);
        assert_eq!(k.light_speed(), 1.0e8);
    }

    #[test]
    fn quanta_invert_to_planck() {
        let k = default_constants();
        let e = k.elementary_charge();
        assert!(rel(k.flux_quantum() * 2.0 * e, k.planck()) <= 2.0 * f64::EPSILON);
        assert!(rel(k.resistance_quantum() * 4.0 * e * e, k.planck()) <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn rejects_non_positive_speed() {
        assert!(PhysicalConstants::with_light_speed(0.0).is_err());
        assert!(PhysicalConstants::with_light_speed(f64::NAN).is_err());
        assert!(PhysicalConstants::with_light_speed(3.0e8).is_ok());
    }
}
