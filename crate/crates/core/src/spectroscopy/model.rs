use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::trap::{transition_frequency_hz, Axis, TrapConfig};

use super::spectrum::{FrequencyGrid, Spectrum};

/// Thermal probability left out of the truncated sum over levels.
pub const THERMAL_TAIL: f64 = 1e-10;

/// Rates of the n → n−1, n → n and n → n+1 scattering processes (1/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringRates {
    pub red: f64,
    pub carrier: f64,
    pub blue: f64,
}

/// Lamb-Dicke expansion of the scattering rates out of level `n` to order η².
pub fn scattering_rates(n: usize, eta: f64, gamma_sc: f64) -> Result<ScatteringRates> {
    if !(eta >= 0.0 && eta < 0.5) {
        return Err(Error::LambDickeViolation { axis: None, eta });
    }
    if !(gamma_sc >= 0.0 && gamma_sc.is_finite()) {
        return Err(Error::InvalidConfig(format!("scattering rate must be >= 0, got {gamma_sc}")));
    }
    let e2 = eta * eta;
    let nf = n as f64;
    let mut carrier = (1.0 - e2 * (2.0 * nf + 1.0)) * gamma_sc;
    if carrier < 0.0 {
        log::warn!("carrier rate of level {n} is negative at eta = {eta}; clipped to zero");
        carrier = 0.0;
    }
    Ok(ScatteringRates { red: e2 * nf * gamma_sc, carrier, blue: e2 * (nf + 1.0) * gamma_sc })
}

/// P(n) = n̄ⁿ / (n̄ + 1)ⁿ⁺¹.
pub fn thermal_population(mean_n: f64, n: usize) -> f64 {
    if mean_n == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let q = mean_n / (mean_n + 1.0);
    q.powi(n as i32) / (mean_n + 1.0)
}

/// Highest level kept so that the omitted thermal probability is at most `tail`.
fn thermal_cutoff(mean_n: f64, tail: f64) -> usize {
    if mean_n == 0.0 {
        return 0;
    }
    let q = mean_n / (mean_n + 1.0);
    // Omitted probability beyond level N is q^(N+1).
    ((tail.ln() / q.ln()).ceil() as usize).saturating_sub(1)
}

/// Area-normalized Lorentzian with full width at half maximum `fwhm`.
#[inline]
pub fn lorentzian(f: f64, center: f64, fwhm: f64) -> f64 {
    let g = 0.5 * fwhm;
    g / (PI * ((f - center) * (f - center) + g * g))
}

/// One incoherent contribution to the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandComponent {
    /// `None` for the elastic carrier.
    pub axis: Option<Axis>,
    pub n_initial: usize,
    pub n_final: usize,
    /// Line center relative to the carrier (Hz).
    pub center_frequency: f64,
    /// Thermally weighted rate (1/s).
    pub rate: f64,
    /// Full width at half maximum (Hz).
    pub width: f64,
}

/// Parameters of the spectrum model.
#[derive(Debug, Clone, PartialEq)]
pub struct LineModel {
    /// Trap frequencies (rad/s).
    pub omega: [f64; 3],
    pub anharmonicity: [f64; 3],
    pub lamb_dicke: [f64; 3],
    pub mean_n: [f64; 3],
    /// Total photon scattering rate Γ_sc (1/s).
    pub scattering_rate: f64,
    /// Smallest line width (Hz, FWHM).
    pub min_width: f64,
    /// Integrated power of the whole spectrum.
    pub amplitude: f64,
    /// Flat background.
    pub offset: f64,
    /// Broaden sidebands by the depopulation rate of their initial level.
    pub rate_broadening: bool,
}

impl LineModel {
    /// Model with frequencies, anharmonicities and Lamb-Dicke parameters from `trap`.
    pub fn from_trap(
        trap: &TrapConfig,
        mean_n: [f64; 3],
        scattering_rate: f64,
        min_width: f64,
        amplitude: f64,
        offset: f64,
    ) -> Result<Self> {
        let m = LineModel {
            omega: trap.omega,
            anharmonicity: trap.anharmonicity,
            lamb_dicke: trap.lamb_dicke_all()?,
            mean_n,
            scattering_rate,
            min_width,
            amplitude,
            offset,
            rate_broadening: true,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.omega[i] > 0.0 && self.omega[i].is_finite()) {
                return Err(Error::InvalidConfig(format!("trap frequency {} must be > 0", self.omega[i])));
            }
            if !(self.mean_n[i] >= 0.0 && self.mean_n[i].is_finite()) {
                return Err(Error::InvalidConfig(format!("mean occupation {} must be >= 0", self.mean_n[i])));
            }
            if !(self.lamb_dicke[i] >= 0.0 && self.lamb_dicke[i] < 0.5) {
                return Err(Error::LambDickeViolation { axis: Some(Axis::ALL[i].label()), eta: self.lamb_dicke[i] });
            }
            let top = thermal_cutoff(self.mean_n[i], THERMAL_TAIL) as f64 + 1.0;
            if !(self.anharmonicity[i] >= 0.0 && self.anharmonicity[i] * top < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "anharmonicity {} inverts the ladder below level {}",
                    self.anharmonicity[i], top
                )));
            }
        }
        if !(self.scattering_rate > 0.0 && self.scattering_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("scattering rate must be > 0, got {}", self.scattering_rate)));
        }
        if !(self.min_width > 0.0 && self.min_width.is_finite()) {
            return Err(Error::InvalidConfig(format!("minimum width must be > 0, got {}", self.min_width)));
        }
        if !(self.amplitude.is_finite() && self.offset.is_finite()) {
            return Err(Error::InvalidConfig("amplitude and offset must be finite".into()));
        }
        Ok(())
    }

    /// Largest sideband frequency (Hz).
    pub fn max_trap_frequency_hz(&self) -> f64 {
        self.omega.iter().fold(0.0f64, |m, &w| m.max(w)) / (2.0 * PI)
    }

    /// Every component, carrier last. Rates sum to the scattering rate.
    pub fn components(&self) -> Vec<SidebandComponent> {
        let gamma = self.scattering_rate;
        let mut out = Vec::new();
        let mut sideband_total = 0.0;
        for axis in Axis::ALL {
            let i = axis.index();
            let (w, a, eta, nbar) = (self.omega[i], self.anharmonicity[i], self.lamb_dicke[i], self.mean_n[i]);
            let e2 = eta * eta;
            for n in 0..=thermal_cutoff(nbar, THERMAL_TAIL) {
                let p = thermal_population(nbar, n);
                let width = if self.rate_broadening {
                    self.min_width.max(e2 * (2.0 * n as f64 + 1.0) * gamma / (2.0 * PI))
                } else {
                    self.min_width
                };
                if n >= 1 {
                    let rate = p * e2 * n as f64 * gamma;
                    sideband_total += rate;
                    out.push(SidebandComponent {
                        axis: Some(axis),
                        n_initial: n,
                        n_final: n - 1,
                        center_frequency: transition_frequency_hz(w, a, n, n - 1),
                        rate,
                        width,
                    });
                }
                let rate = p * e2 * (n as f64 + 1.0) * gamma;
                sideband_total += rate;
                out.push(SidebandComponent {
                    axis: Some(axis),
                    n_initial: n,
                    n_final: n + 1,
                    center_frequency: transition_frequency_hz(w, a, n, n + 1),
                    rate,
                    width,
                });
            }
        }
        let carrier = gamma - sideband_total;
        if carrier < 0.0 {
            log::warn!("sideband rates exceed the scattering rate; carrier clipped to zero");
        }
        out.push(SidebandComponent {
            axis: None,
            n_initial: 0,
            n_final: 0,
            center_frequency: 0.0,
            rate: carrier.max(0.0),
            width: self.min_width,
        });
        out
    }

    /// PSD at arbitrary frequencies.
    pub fn evaluate(&self, freqs: &[f64]) -> Vec<f64> {
        let comps = self.components();
        let scale = self.amplitude / self.scattering_rate;
        freqs
            .iter()
            .map(|&f| {
                self.offset + scale * comps.iter().map(|c| c.rate * lorentzian(f, c.center_frequency, c.width)).sum::<f64>()
            })
            .collect()
    }

    /// Component table as CSV.
    pub fn components_csv(&self) -> String {
        let mut s = String::from("# axis, n_from, n_to, f_hz [Hz], rate [1/s], width [Hz]\naxis,n_from,n_to,f_hz,rate,width\n");
        for c in self.components() {
            let axis = c.axis.map(|a| a.label()).unwrap_or('c');
            let _ = writeln!(s, "{axis},{},{},{},{},{}", c.n_initial, c.n_final, c.center_frequency, c.rate, c.width);
        }
        s
    }
}

/// Noiseless spectrum of `model` on `grid`.
pub fn synthesize_spectrum(model: &LineModel, grid: &FrequencyGrid) -> Result<Spectrum> {
    model.validate()?;
    if grid.step > model.min_width / 5.0 {
        return Err(Error::GridTooCoarse { step: grid.step, min_width: model.min_width });
    }
    let fmax = model.max_trap_frequency_hz();
    if grid.start > -fmax || grid.end() < fmax {
        return Err(Error::InvalidConfig(format!(
            "grid [{}, {}] Hz does not cover the sidebands at ±{fmax:.0} Hz",
            grid.start,
            grid.end()
        )));
    }
    let psd = model.evaluate(&grid.frequencies());
    if let Some(v) = psd.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidConfig(format!("model spectrum is negative ({v}); check amplitude and offset")));
    }
    Spectrum::new(*grid, psd)
}
