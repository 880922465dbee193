//! Physical constants (CODATA 2018) and cesium D2 line data.

use std::f64::consts::PI;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Bohr magneton per gauss (J/G).
pub const BOHR_MAGNETON_PER_GAUSS: f64 = BOHR_MAGNETON * 1e-4;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of 133Cs (kg).
pub const CS_MASS: f64 = 132.905_451_961 * ATOMIC_MASS_UNIT;
/// Cs D2 wavelength used for the probe wavevector (m).
pub const CS_D2_WAVELENGTH: f64 = 852.3e-9;
/// Cs D2 natural linewidth Γ (1/s).
pub const CS_D2_LINEWIDTH: f64 = 2.0 * PI * 5.22e6;
/// Cs D2 cycling-transition saturation intensity (mW/cm²).
pub const CS_D2_SATURATION_INTENSITY: f64 = 1.105;
/// Hyperfine Landé factor of the Cs 6S1/2 F = 4 manifold.
pub const CS_F4_LANDE_G: f64 = 0.25;
/// Total spin of the cooled manifold.
pub const CS_F4_TOTAL_SPIN: u32 = 4;

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cs_mass_matches_tabulated_value() {
        assert!((CS_MASS / 2.206_946_95e-25 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hbar_consistent_with_planck() {
        assert!((HBAR * 2.0 * PI / PLANCK - 1.0).abs() < 1e-9);
    }
}
