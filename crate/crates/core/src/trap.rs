//! Trap geometry, field configuration and the derived single-particle
//! frequencies: oscillator lengths, Lamb-Dicke parameters, Zeeman splitting
//! and the gradient-induced spin-motion coupling.

use std::f64::consts::PI;
use std::fmt;

use crate::constants::{
    hz_to_rad, BOHR_MAGNETON_PER_GAUSS, CS_D2_LINEWIDTH, CS_D2_WAVELENGTH, CS_F4_LANDE_G,
    CS_F4_TOTAL_SPIN, CS_MASS, HBAR,
};
use crate::error::{Error, Result};

/// Trap axis: x radial, y azimuthal, z axial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Harmonic trap with per-axis anharmonic corrections.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// Angular trap frequencies (rad/s).
    pub omega: [f64; 3],
    /// Level-spacing shrink coefficient per axis.
    pub anharmonicity: [f64; 3],
    /// Atomic mass (kg).
    pub mass: f64,
    /// Wavelength of the scattered light (m).
    pub wavelength_probe: f64,
    /// Absorbing-boundary level per axis.
    pub trap_depth_quanta: [usize; 3],
    /// Projection of the probe wavevector on each axis (1 = full wavevector).
    pub lamb_dicke_projection: [f64; 3],
}

impl TrapConfig {
    /// Validated constructor with unit wavevector projections.
    pub fn new(
        omega: [f64; 3],
        anharmonicity: [f64; 3],
        mass: f64,
        wavelength_probe: f64,
        trap_depth_quanta: [usize; 3],
    ) -> Result<Self> {
        let trap = TrapConfig {
            omega,
            anharmonicity,
            mass,
            wavelength_probe,
            trap_depth_quanta,
            lamb_dicke_projection: [1.0; 3],
        };
        trap.validate()?;
        Ok(trap)
    }

    /// Cesium in a trap with the given frequencies in kHz.
    pub fn cesium_khz(freq_khz: [f64; 3], trap_depth_quanta: [usize; 3]) -> Result<Self> {
        Self::new(
            freq_khz.map(|f| hz_to_rad(f * 1e3)),
            [0.0; 3],
            CS_MASS,
            CS_D2_WAVELENGTH,
            trap_depth_quanta,
        )
    }

    /// Checks the record invariants, including the Lamb-Dicke regime.
    pub fn validate(&self) -> Result<()> {
        for (i, &w) in self.omega.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "trap frequency on axis {} must be positive, got {w}",
                    Axis::ALL[i]
                )));
            }
        }
        for (i, &a) in self.anharmonicity.iter().enumerate() {
            if !(0.0..0.1).contains(&a) {
                return Err(Error::InvalidConfig(format!(
                    "anharmonicity on axis {} must lie in [0, 0.1), got {a}",
                    Axis::ALL[i]
                )));
            }
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.wavelength_probe > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "probe wavelength must be positive, got {}",
                self.wavelength_probe
            )));
        }
        for (i, &p) in self.lamb_dicke_projection.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "wavevector projection on axis {} must be nonnegative, got {p}",
                    Axis::ALL[i]
                )));
            }
        }
        for (i, &d) in self.trap_depth_quanta.iter().enumerate() {
            if d < 1 {
                return Err(Error::InvalidConfig(format!(
                    "trap depth on axis {} must be at least 1 quantum",
                    Axis::ALL[i]
                )));
            }
        }
        for axis in Axis::ALL {
            lamb_dicke(self, axis)?;
        }
        Ok(())
    }

    #[inline]
    pub fn omega(&self, axis: Axis) -> f64 {
        self.omega[axis.index()]
    }

    /// Lamb-Dicke parameters of all three axes.
    pub fn lamb_dicke_all(&self) -> Result<[f64; 3]> {
        Ok([
            lamb_dicke(self, Axis::X)?,
            lamb_dicke(self, Axis::Y)?,
            lamb_dicke(self, Axis::Z)?,
        ])
    }
}

/// Static fields acting on the hyperfine manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    /// Offset field along y (G).
    pub b_off: f64,
    /// Fictitious-field gradient along x per unit y (G/m).
    pub b_gradient: f64,
    /// Hyperfine Landé factor.
    pub lande_g: f64,
    /// Total spin F.
    pub f_total: u32,
}

impl FieldConfig {
    pub fn new(b_off: f64, b_gradient: f64, lande_g: f64, f_total: u32) -> Result<Self> {
        let field = FieldConfig { b_off, b_gradient, lande_g, f_total };
        field.validate()?;
        Ok(field)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_off.is_finite() && self.b_off >= 0.0) {
            return Err(Error::InvalidConfig(format!("offset field must be >= 0, got {}", self.b_off)));
        }
        if !self.b_gradient.is_finite() {
            return Err(Error::InvalidConfig("field gradient must be finite".into()));
        }
        if !(self.lande_g.is_finite() && self.lande_g != 0.0) {
            return Err(Error::InvalidConfig(format!(
                "Landé factor must be finite and nonzero, got {}",
                self.lande_g
            )));
        }
        if self.f_total < 1 {
            return Err(Error::InvalidConfig("total spin must be at least 1".into()));
        }
        Ok(())
    }

    /// Same configuration at another offset field.
    pub fn with_offset(&self, b_off: f64) -> Self {
        FieldConfig { b_off, ..self.clone() }
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            b_off: 0.25,
            b_gradient: 1.6e6,
            lande_g: CS_F4_LANDE_G,
            f_total: CS_F4_TOTAL_SPIN,
        }
    }
}

/// Cooling and pumping beam.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserConfig {
    /// Detuning from the cycling transition in units of Γ.
    pub detuning: f64,
    /// Peak intensity in units of the saturation intensity.
    pub intensity: f64,
    /// Natural linewidth Γ (1/s).
    pub linewidth_natural: f64,
    /// Differential light shift per unit of m_F (rad/s).
    pub ac_stark_shift_per_mf: f64,
}

impl LaserConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.detuning.is_finite() {
            return Err(Error::InvalidConfig("laser detuning must be finite".into()));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "laser intensity must be >= 0, got {}",
                self.intensity
            )));
        }
        if !(self.linewidth_natural.is_finite() && self.linewidth_natural > 0.0) {
            return Err(Error::InvalidConfig("natural linewidth must be positive".into()));
        }
        if !self.ac_stark_shift_per_mf.is_finite() {
            return Err(Error::InvalidConfig("ac Stark shift must be finite".into()));
        }
        Ok(())
    }

    /// Photon scattering rate (1/s) of the pumping beam.
    pub fn pump_rate(&self) -> f64 {
        let s = self.intensity;
        0.5 * self.linewidth_natural * s / (1.0 + s + 4.0 * self.detuning * self.detuning)
    }
}

impl Default for LaserConfig {
    fn default() -> Self {
        LaserConfig {
            detuning: -12.0,
            intensity: 4.1,
            linewidth_natural: CS_D2_LINEWIDTH,
            ac_stark_shift_per_mf: 0.0,
        }
    }
}

/// Ground-state extent sqrt(ħ / (2 m ω)) along `axis` (m).
pub fn oscillator_length(trap: &TrapConfig, axis: Axis) -> f64 {
    (HBAR / (2.0 * trap.mass * trap.omega(axis))).sqrt()
}

/// Lamb-Dicke parameter k·x₀ along `axis`.
pub fn lamb_dicke(trap: &TrapConfig, axis: Axis) -> Result<f64> {
    let k = 2.0 * PI / trap.wavelength_probe;
    let eta = k * trap.lamb_dicke_projection[axis.index()] * oscillator_length(trap, axis);
    if eta >= 0.5 || !eta.is_finite() {
        return Err(Error::LambDickeViolation { axis: Some(axis.label()), eta });
    }
    Ok(eta)
}

/// Splitting between adjacent Zeeman sublevels, g_F μ_B B_off / ħ (rad/s).
pub fn zeeman_splitting(field: &FieldConfig) -> f64 {
    field.lande_g * BOHR_MAGNETON_PER_GAUSS * field.b_off / HBAR
}

/// Spin-motion coupling along y, g_F μ_B b y₀ / (2ħ) (rad/s).
pub fn spin_motion_coupling(trap: &TrapConfig, field: &FieldConfig) -> f64 {
    field.lande_g * BOHR_MAGNETON_PER_GAUSS * field.b_gradient * oscillator_length(trap, Axis::Y)
        / (2.0 * HBAR)
}

/// Offset field (G) at which the Zeeman splitting equals the trap frequency of `axis`.
pub fn resonant_field(trap: &TrapConfig, field: &FieldConfig, axis: Axis) -> f64 {
    HBAR * trap.omega(axis) / (field.lande_g.abs() * BOHR_MAGNETON_PER_GAUSS)
}

/// E_n / ħ = ω (n + ½)(1 − α n / 2) (rad/s).
#[inline]
pub fn level_energy_rad(omega: f64, alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    omega * (n + 0.5) * (1.0 - 0.5 * alpha * n)
}

/// Frequency (Hz) of the n → n' motional transition.
#[inline]
pub fn transition_frequency_hz(omega: f64, alpha: f64, n: usize, n_final: usize) -> f64 {
    (level_energy_rad(omega, alpha, n_final) - level_energy_rad(omega, alpha, n)) / (2.0 * PI)
}

/// Energy (J) of level `n` along `axis`, including the anharmonic correction.
pub fn anharmonic_level_energy(trap: &TrapConfig, axis: Axis, n: usize) -> Result<f64> {
    let depth = trap.trap_depth_quanta[axis.index()];
    if n > depth {
        return Err(Error::IndexAboveTrapDepth { n, depth });
    }
    let i = axis.index();
    Ok(HBAR * level_energy_rad(trap.omega[i], trap.anharmonicity[i], n))
}
