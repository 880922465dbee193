//! Heterodyne detection chain: photon clicks and spectral estimation.

mod clicks;
mod pipeline;
mod welch;

pub use clicks::{simulate_click_stream, ClickStream, ModulationModel, Tone};
pub use pipeline::{average_realizations, relative_to_carrier, simulate_measurement, PipelineOptions};
pub use welch::{average_psds, band_power, bin_counts, hann, welch_psd, welch_signal, PsdEstimate, WelchOptions};
