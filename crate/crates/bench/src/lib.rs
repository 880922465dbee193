//! Fixtures shared by the benchmarks.

use drc_core::dynamics::{AxisModel, DissipatorSet, ModelOptions};
use drc_core::spectroscopy::LineModel;
use drc_core::trap::resonant_field;
use drc_core::{Axis, FieldConfig, LaserConfig, TrapConfig};

/// y-axis cooling model on resonance with `depth` motional levels.
pub fn y_axis_model(depth: usize) -> AxisModel {
    let trap = TrapConfig::cesium_khz([136.0, 83.0, 215.0], [depth; 3]).expect("valid trap");
    let field = FieldConfig::default();
    let field = field.with_offset(resonant_field(&trap, &field, Axis::Y));
    let laser = LaserConfig::default();
    let diss = DissipatorSet::from_laser(&trap, &laser, 4, [0.4; 3], [300.0; 3]).expect("valid dissipators");
    AxisModel::new(&trap, &field, &laser, &diss, Axis::Y, &ModelOptions::default()).expect("valid model")
}

/// Spectrum model with the fitted trap frequencies.
pub fn spectrum_model() -> LineModel {
    let trap = TrapConfig::cesium_khz([154.0, 94.0, 233.0], [25; 3]).expect("valid trap");
    LineModel::from_trap(&trap, [1.4, 0.58, 0.22], 1e5, 1e4, 1.0, 1e-7).expect("valid line model")
}
