//! Forward model of the heterodyne fluorescence spectrum and sideband thermometry.
//!
//! Frequencies are relative to the heterodyne carrier. A component from
//! level n to n' sits at f = (E_n' − E_n)/h, so the red sideband
//! (n → n − 1) appears at negative frequency.

mod model;
mod spectrum;
mod thermometry;

pub use model::{
    lorentzian, scattering_rates, synthesize_spectrum, thermal_population, LineModel, ScatteringRates,
    SidebandComponent, THERMAL_TAIL,
};
pub use spectrum::{FrequencyGrid, Spectrum};
pub use thermometry::{
    ground_state_occupation, integrate_band, sideband_integrals, sideband_thermometry, Band, SidebandIntegrals,
    Thermometry,
};
