//! Run configuration: a sectioned TOML file whose every key has a default.

use std::path::PathBuf;

use drc_core::constants::{CS_D2_LINEWIDTH, CS_D2_WAVELENGTH, CS_F4_LANDE_G, CS_F4_TOTAL_SPIN, CS_MASS};
use drc_core::dynamics::{DissipatorSet, Integrator, ModelOptions, ScanOptions};
use drc_core::fitting::{FitOptions, LmOptions, OccupationParameterization};
use drc_core::quantum::HamiltonianForm;
use drc_core::signal::{PipelineOptions, WelchOptions};
use drc_core::spectroscopy::{FrequencyGrid, LineModel};
use drc_core::{Axis, Error, FieldConfig, LaserConfig, Result, TrapConfig};
use serde::{Deserialize, Serialize};

fn khz_to_rad(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f * 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed for every stochastic stage.
    pub seed: u64,
    /// Directory receiving the output files.
    pub out_dir: PathBuf,
    pub trap: TrapSection,
    pub field: FieldSection,
    pub laser: LaserSection,
    pub dissipators: DissipatorSection,
    pub model: ModelSection,
    pub scan: ScanSection,
    pub cool: CoolSection,
    pub spectrum: SpectrumSection,
    pub signal: SignalSection,
    pub fit: FitSection,
    pub thermometry: ThermometrySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out_dir: PathBuf::from("out"),
            trap: TrapSection::default(),
            field: FieldSection::default(),
            laser: LaserSection::default(),
            dissipators: DissipatorSection::default(),
            model: ModelSection::default(),
            scan: ScanSection::default(),
            cool: CoolSection::default(),
            spectrum: SpectrumSection::default(),
            signal: SignalSection::default(),
            fit: FitSection::default(),
            thermometry: ThermometrySection::default(),
        }
    }
}

/// Ab initio trap used by the cooling simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapSection {
    pub freq_khz: [f64; 3],
    pub anharmonicity: [f64; 3],
    pub mass_kg: f64,
    pub wavelength_probe_m: f64,
    pub trap_depth_quanta: [usize; 3],
    pub lamb_dicke_projection: [f64; 3],
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection {
            freq_khz: [136.0, 83.0, 215.0],
            anharmonicity: [0.0; 3],
            mass_kg: CS_MASS,
            wavelength_probe_m: CS_D2_WAVELENGTH,
            trap_depth_quanta: [20; 3],
            lamb_dicke_projection: [1.0; 3],
        }
    }
}

impl TrapSection {
    pub fn build(&self) -> Result<TrapConfig> {
        self.build_with(self.freq_khz)
    }

    /// Same trap with other frequencies.
    pub fn build_with(&self, freq_khz: [f64; 3]) -> Result<TrapConfig> {
        let mut t = TrapConfig::new(
            freq_khz.map(khz_to_rad),
            self.anharmonicity,
            self.mass_kg,
            self.wavelength_probe_m,
            self.trap_depth_quanta,
        )?;
        t.lamb_dicke_projection = self.lamb_dicke_projection;
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub b_off_gauss: f64,
    pub b_gradient_gauss_per_m: f64,
    pub lande_g: f64,
    pub f_total: u32,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { b_off_gauss: 0.25, b_gradient_gauss_per_m: 1.6e6, lande_g: CS_F4_LANDE_G, f_total: CS_F4_TOTAL_SPIN }
    }
}

impl FieldSection {
    pub fn build(&self) -> Result<FieldConfig> {
        FieldConfig::new(self.b_off_gauss, self.b_gradient_gauss_per_m, self.lande_g, self.f_total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserSection {
    /// Detuning in units of the natural linewidth.
    pub detuning_gamma: f64,
    /// Intensity in units of the saturation intensity.
    pub intensity_sat: f64,
    pub linewidth_natural_per_s: f64,
    pub ac_stark_shift_per_mf_rad_s: f64,
}

impl Default for LaserSection {
    fn default() -> Self {
        LaserSection {
            detuning_gamma: -12.0,
            intensity_sat: 4.1,
            linewidth_natural_per_s: CS_D2_LINEWIDTH,
            ac_stark_shift_per_mf_rad_s: 0.0,
        }
    }
}

impl LaserSection {
    pub fn build(&self) -> Result<LaserConfig> {
        let l = LaserConfig {
            detuning: self.detuning_gamma,
            intensity: self.intensity_sat,
            linewidth_natural: self.linewidth_natural_per_s,
            ac_stark_shift_per_mf: self.ac_stark_shift_per_mf_rad_s,
        };
        l.validate()?;
        Ok(l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DissipatorSection {
    /// Recoil quanta per scattering event in units of η².
    pub recoil_geometry: [f64; 3],
    /// Background heating (quanta/s).
    pub background_heating_per_s: [f64; 3],
    /// Finite bath occupation; omitted for the high-temperature limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_occupation: Option<f64>,
    /// Replaces the pump rate derived from the laser (1/s).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_rate_per_s: Option<f64>,
}

impl Default for DissipatorSection {
    fn default() -> Self {
        DissipatorSection {
            recoil_geometry: [0.4; 3],
            background_heating_per_s: [300.0; 3],
            background_occupation: None,
            pump_rate_per_s: None,
        }
    }
}

impl DissipatorSection {
    pub fn build(&self, trap: &TrapConfig, laser: &LaserConfig, f_total: u32) -> Result<DissipatorSet> {
        let mut d =
            DissipatorSet::from_laser(trap, laser, f_total, self.recoil_geometry, self.background_heating_per_s)?;
        d.background_occupation = self.background_occupation;
        if let Some(r) = self.pump_rate_per_s {
            d.pump_rate = r;
        }
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Coupling of each axis relative to y.
    pub coupling_factor: [f64; 3],
    /// `rwa` or `full`.
    pub hamiltonian: String,
    /// Fock truncation; omitted to use the trap depth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { coupling_factor: [0.3, 1.0, 0.3], hamiltonian: "rwa".into(), n_max: None }
    }
}

impl ModelSection {
    pub fn build(&self) -> Result<ModelOptions> {
        let form = match self.hamiltonian.as_str() {
            "rwa" => HamiltonianForm::RotatingWave,
            "full" => HamiltonianForm::Full,
            other => return Err(Error::InvalidConfig(format!("model.hamiltonian must be rwa or full, got {other}"))),
        };
        Ok(ModelOptions { coupling_factor: self.coupling_factor, form, n_max: self.n_max })
    }
}

fn parse_axes(key: &str, labels: &[String]) -> Result<Vec<Axis>> {
    labels
        .iter()
        .map(|l| match l.as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidConfig(format!("{key}: unknown axis {other}"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub b_min_gauss: f64,
    pub b_max_gauss: f64,
    pub points: usize,
    pub duration_s: f64,
    pub dt_s: f64,
    pub initial_mean_n: f64,
    pub axes: Vec<String>,
    /// Axes whose losses enter the survival product.
    pub survival_axes: Vec<String>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            b_min_gauss: 0.02,
            b_max_gauss: 0.8,
            points: 40,
            duration_s: 0.5,
            dt_s: 1e-3,
            initial_mean_n: 1.0,
            axes: vec!["x".into(), "y".into(), "z".into()],
            survival_axes: vec!["y".into()],
        }
    }
}

impl ScanSection {
    pub fn fields(&self) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::InvalidConfig(format!("scan.points must be at least 2, got {}", self.points)));
        }
        if !(self.b_min_gauss >= 0.0 && self.b_max_gauss > self.b_min_gauss) {
            return Err(Error::InvalidConfig("scan field range must satisfy 0 <= b_min < b_max".into()));
        }
        let step = (self.b_max_gauss - self.b_min_gauss) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.b_min_gauss + step * i as f64).collect())
    }

    pub fn build(&self, model: ModelOptions) -> Result<ScanOptions> {
        Ok(ScanOptions {
            duration: self.duration_s,
            dt: self.dt_s,
            initial_mean_n: self.initial_mean_n,
            axes: parse_axes("scan.axes", &self.axes)?,
            survival_axes: parse_axes("scan.survival_axes", &self.survival_axes)?,
            model,
            ..ScanOptions::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoolSection {
    pub axis: String,
    /// Offset field; omitted to sit on the first-order resonance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_off_gauss: Option<f64>,
    pub duration_s: f64,
    pub dt_s: f64,
    pub sample_interval_s: f64,
    /// `rk4` or `trbdf2`.
    pub integrator: String,
    pub initial_mean_n: f64,
    /// Initial spin projection.
    pub initial_m: i32,
    /// `absorbing` or `reflecting`.
    pub boundary: String,
}

impl Default for CoolSection {
    fn default() -> Self {
        CoolSection {
            axis: "y".into(),
            b_off_gauss: None,
            duration_s: 2e-3,
            dt_s: 2e-7,
            sample_interval_s: 2e-5,
            integrator: "rk4".into(),
            initial_mean_n: 1.0,
            initial_m: -4,
            boundary: "reflecting".into(),
        }
    }
}

impl CoolSection {
    pub fn axis(&self) -> Result<Axis> {
        Ok(parse_axes("cool.axis", std::slice::from_ref(&self.axis))?[0])
    }

    pub fn integrator(&self) -> Result<Integrator> {
        match self.integrator.as_str() {
            "rk4" => Ok(Integrator::Rk4),
            "trbdf2" => Ok(Integrator::TrBdf2),
            other => Err(Error::InvalidConfig(format!("cool.integrator must be rk4 or trbdf2, got {other}"))),
        }
    }

    pub fn boundary(&self) -> Result<drc_core::dynamics::Boundary> {
        use drc_core::dynamics::Boundary;
        match self.boundary.as_str() {
            "absorbing" => Ok(Boundary::Absorbing),
            "reflecting" => Ok(Boundary::Reflecting),
            other => Err(Error::InvalidConfig(format!("cool.boundary must be absorbing or reflecting, got {other}"))),
        }
    }
}

/// Spectrum model used for synthesis and as the fixed part of the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub mean_n: [f64; 3],
    /// Trap frequencies seen by the spectrum (kHz).
    pub freq_khz: [f64; 3],
    pub scattering_rate_per_s: f64,
    pub min_width_hz: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub rate_broadening: bool,
    pub half_span_hz: f64,
    pub step_hz: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            mean_n: [1.4, 0.58, 0.22],
            freq_khz: [154.0, 94.0, 233.0],
            scattering_rate_per_s: 1e5,
            min_width_hz: 1e4,
            amplitude: 1.0,
            offset: 1e-7,
            rate_broadening: true,
            half_span_hz: 400e3,
            step_hz: 500.0,
        }
    }
}

impl SpectrumSection {
    pub fn line_model(&self, trap: &TrapSection) -> Result<LineModel> {
        let t = trap.build_with(self.freq_khz)?;
        let mut m = LineModel::from_trap(
            &t,
            self.mean_n,
            self.scattering_rate_per_s,
            self.min_width_hz,
            self.amplitude,
            self.offset,
        )?;
        m.rate_broadening = self.rate_broadening;
        m.validate()?;
        Ok(m)
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::symmetric(self.half_span_hz, self.step_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub realizations: usize,
    pub duration_s: f64,
    pub mean_rate_per_s: f64,
    pub carrier_offset_hz: f64,
    pub total_depth: f64,
    pub min_weight: f64,
    pub window_s: f64,
    pub overlap: f64,
    pub bin_width_s: f64,
    pub span_hz: f64,
}

impl Default for SignalSection {
    fn default() -> Self {
        let p = PipelineOptions::default();
        SignalSection {
            realizations: p.realizations,
            duration_s: p.duration,
            mean_rate_per_s: p.mean_rate,
            carrier_offset_hz: p.carrier_offset,
            total_depth: p.total_depth,
            min_weight: p.min_weight,
            window_s: p.welch.window_length,
            overlap: p.welch.overlap,
            bin_width_s: p.welch.bin_width,
            span_hz: p.span,
        }
    }
}

impl SignalSection {
    pub fn build(&self) -> PipelineOptions {
        PipelineOptions {
            realizations: self.realizations,
            duration: self.duration_s,
            mean_rate: self.mean_rate_per_s,
            carrier_offset: self.carrier_offset_hz,
            total_depth: self.total_depth,
            min_weight: self.min_weight,
            welch: WelchOptions { window_length: self.window_s, overlap: self.overlap, bin_width: self.bin_width_s },
            span: self.span_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// `log1p` or `direct`.
    pub parameterization: String,
    pub release_anharmonicity: bool,
    pub inverse_variance: bool,
    pub starts: usize,
    /// Relative perturbation of the extra starting points.
    pub spread: f64,
    pub max_iterations: usize,
    /// Starting minimum width (Hz).
    pub initial_min_width_hz: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            parameterization: "log1p".into(),
            release_anharmonicity: false,
            inverse_variance: false,
            starts: 4,
            spread: 0.1,
            max_iterations: 200,
            initial_min_width_hz: 1e4,
        }
    }
}

impl FitSection {
    pub fn build(&self) -> Result<FitOptions> {
        let parameterization = match self.parameterization.as_str() {
            "log1p" => OccupationParameterization::Log1p,
            "direct" => OccupationParameterization::Direct,
            other => {
                return Err(Error::InvalidConfig(format!("fit.parameterization must be log1p or direct, got {other}")))
            }
        };
        if self.starts == 0 {
            return Err(Error::InvalidConfig("fit.starts must be at least 1".into()));
        }
        Ok(FitOptions {
            lm: LmOptions { max_iterations: self.max_iterations, ..LmOptions::default() },
            parameterization,
            release_anharmonicity: self.release_anharmonicity,
            inverse_variance: self.inverse_variance,
        })
    }
}

/// Integration windows for direct sideband thermometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermometrySection {
    /// Sideband positions per axis (kHz).
    pub center_khz: [f64; 3],
    /// Half-width of each band (kHz).
    pub half_width_khz: [f64; 3],
    /// Width of the baseline windows flanking each band (kHz); 0 disables.
    pub guard_khz: f64,
}

impl Default for ThermometrySection {
    fn default() -> Self {
        ThermometrySection { center_khz: [154.0, 94.0, 233.0], half_width_khz: [20.0; 3], guard_khz: 10.0 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every section against the invariants of its module.
    pub fn validate(&self) -> Result<()> {
        let trap = self.trap.build()?;
        let field = self.field.build()?;
        let laser = self.laser.build()?;
        self.dissipators.build(&trap, &laser, field.f_total)?;
        let model = self.model.build()?;
        self.scan.build(model)?;
        self.cool.axis()?;
        self.cool.integrator()?;
        self.cool.boundary()?;
        self.spectrum.line_model(&self.trap)?;
        self.spectrum.grid()?;
        self.fit.build()?;
        Ok(())
    }
}
