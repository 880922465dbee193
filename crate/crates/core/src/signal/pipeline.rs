//! End-to-end synthetic measurement: click streams, Welch estimates, averaging.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::spectroscopy::{FrequencyGrid, LineModel, Spectrum};

use super::clicks::{simulate_click_stream, ModulationModel};
use super::welch::{average_psds, welch_psd, PsdEstimate, WelchOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub realizations: usize,
    /// Record length of one realization (s).
    pub duration: f64,
    /// Mean click rate (1/s).
    pub mean_rate: f64,
    /// Heterodyne carrier (Hz).
    pub carrier_offset: f64,
    /// Sum of the modulation depths.
    pub total_depth: f64,
    /// Components below this fraction of the total rate are not simulated.
    pub min_weight: f64,
    pub welch: WelchOptions,
    /// Half-width of the window kept around the carrier (Hz).
    pub span: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            realizations: 100,
            duration: 0.2,
            mean_rate: 1e7,
            carrier_offset: 10e6,
            total_depth: 0.9,
            min_weight: 1e-7,
            welch: WelchOptions::default(),
            span: 400e3,
        }
    }
}

/// Re-expresses the part of `spectrum` within `span` of `carrier` on a
/// frequency axis relative to the carrier.
pub fn relative_to_carrier(spectrum: &Spectrum, carrier: f64, span: f64) -> Result<Spectrum> {
    let cropped = spectrum.crop(carrier - span, carrier + span)?;
    let grid = FrequencyGrid::new(cropped.grid.start - carrier, cropped.grid.step, cropped.grid.len)?;
    Ok(Spectrum { grid, ..cropped })
}

/// Simulates and averages `realizations` records of `modulation`.
///
/// Realization `i` uses the seed `derive_seed(master_seed, i)`; the
/// average is taken in realization order.
pub fn average_realizations(
    modulation: &ModulationModel,
    options: &PipelineOptions,
    master_seed: u64,
) -> Result<PsdEstimate> {
    if options.realizations == 0 {
        return Err(Error::InvalidConfig("at least one realization is required".into()));
    }
    let estimates: Vec<PsdEstimate> = (0..options.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let stream = simulate_click_stream(
                modulation,
                options.mean_rate,
                options.carrier_offset,
                options.duration,
                derive_seed(master_seed, i),
            )?;
            welch_psd(&stream, &options.welch)
        })
        .collect::<Result<_>>()?;
    average_psds(&estimates)
}

/// Shot-noise-limited measured spectrum of `model`, relative to the carrier.
pub fn simulate_measurement(model: &LineModel, options: &PipelineOptions, master_seed: u64) -> Result<Spectrum> {
    let modulation = ModulationModel::from_line_model(model, options.total_depth, options.min_weight)?;
    let estimate = average_realizations(&modulation, options, master_seed)?;
    relative_to_carrier(&estimate.spectrum, options.carrier_offset, options.span)
}
