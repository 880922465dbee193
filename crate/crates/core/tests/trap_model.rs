//! Single-particle trap quantities against closed-form evaluations with
//! independently typed constants, plus scaling-law properties.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use drc_core::trap::{
    anharmonic_level_energy, lamb_dicke, level_energy_rad, oscillator_length, resonant_field, spin_motion_coupling,
    transition_frequency_hz, zeeman_splitting,
};
use drc_core::{Axis, FieldConfig, TrapConfig};
use proptest::prelude::*;

// CODATA 2018, typed in here rather than taken from the crate.
const HBAR: f64 = 1.054571817e-34;
const MU_B_PER_GAUSS: f64 = 9.2740100783e-28;
const CS_MASS: f64 = 132.905451961 * 1.66053906660e-27;

fn trap() -> TrapConfig {
    TrapConfig::cesium_khz([136.0, 83.0, 215.0], [25; 3]).unwrap()
}

fn y0_oracle(f_khz: f64) -> f64 {
    (HBAR / (2.0 * CS_MASS * 2.0 * PI * f_khz * 1e3)).sqrt()
}

#[test]
fn ground_state_extents() {
    let t = trap();
    assert_relative_eq!(oscillator_length(&t, Axis::Y), y0_oracle(83.0), max_relative = 1e-12);
    assert!((oscillator_length(&t, Axis::Y) * 1e9 - 21.4).abs() < 0.05);
    assert!((oscillator_length(&t, Axis::X) * 1e9 - 16.7).abs() < 0.05);
}

#[test]
fn lamb_dicke_parameters() {
    let t = trap();
    let k = 2.0 * PI / 852.3e-9;
    assert_relative_eq!(lamb_dicke(&t, Axis::Y).unwrap(), k * y0_oracle(83.0), max_relative = 1e-12);
    assert!((lamb_dicke(&t, Axis::Y).unwrap() - 0.158).abs() < 5e-4);
    assert!((lamb_dicke(&t, Axis::Z).unwrap() - 0.098).abs() < 5e-4);
}

#[test]
fn zeeman_splitting_at_quarter_gauss() {
    let field = FieldConfig::default().with_offset(0.25);
    let oracle = 0.25 * MU_B_PER_GAUSS * 0.25 / HBAR;
    assert_relative_eq!(zeeman_splitting(&field), oracle, max_relative = 1e-12);
    assert!((zeeman_splitting(&field) / (2.0 * PI) - 87.5e3).abs() < 0.1e3);
}

#[test]
fn coupling_at_default_gradient() {
    // b = 1.6 G/µm expressed in G/m.
    let field = FieldConfig::default();
    assert_relative_eq!(field.b_gradient, 1.6e6, max_relative = 1e-15);
    let oracle = 0.25 * MU_B_PER_GAUSS * 1.6e6 * y0_oracle(83.0) / (2.0 * HBAR);
    let omega = spin_motion_coupling(&trap(), &field);
    assert_relative_eq!(omega, oracle, max_relative = 1e-12);
    assert!((omega / (2.0 * PI) - 6.0e3).abs() < 0.05e3);
}

#[test]
fn resonant_fields() {
    let t = trap();
    let field = FieldConfig::default();
    let oracle = |f_khz: f64| HBAR * 2.0 * PI * f_khz * 1e3 / (0.25 * MU_B_PER_GAUSS);
    assert_relative_eq!(resonant_field(&t, &field, Axis::Y), oracle(83.0), max_relative = 1e-12);
    assert!((resonant_field(&t, &field, Axis::Y) - 0.237).abs() < 1e-3);
    assert!((resonant_field(&t, &field, Axis::Z) - 0.615).abs() < 1e-3);
}

#[test]
fn anharmonic_red_blue_splitting() {
    // E_n/ħ = ω (n + ½)(1 − α n/2) expands to f(0→1) = f(1 − 3α/4) and
    // f(1→2) = f(1 − 7α/4), so adjacent blue lines sit α·f apart.
    let (w, a) = (2.0 * PI * 94e3, 0.02);
    assert_relative_eq!(transition_frequency_hz(w, a, 0, 1), 94e3 * (1.0 - 0.75 * a), max_relative = 1e-13);
    assert_relative_eq!(transition_frequency_hz(w, a, 1, 0), -94e3 * (1.0 - 0.75 * a), max_relative = 1e-13);
    assert_relative_eq!(transition_frequency_hz(w, a, 1, 2), 94e3 * (1.0 - 1.75 * a), max_relative = 1e-13);
    assert_relative_eq!(
        transition_frequency_hz(w, a, 0, 1) - transition_frequency_hz(w, a, 1, 2),
        94e3 * a,
        max_relative = 1e-10
    );
}

#[test]
fn ladder_monotone_below_depth() {
    let mut t = trap();
    t.anharmonicity = [0.0, 1.0 / 26.0 - 1e-6, 0.0];
    for n in 0..25 {
        assert!(anharmonic_level_energy(&t, Axis::Y, n + 1).unwrap() > anharmonic_level_energy(&t, Axis::Y, n).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn length_and_eta_scale_as_inverse_root_frequency(f in 50.0f64..400.0, s in 0.25f64..4.0) {
        let a = TrapConfig::cesium_khz([f, f, f], [25; 3]).unwrap();
        let b = TrapConfig::cesium_khz([f * s; 3], [25; 3]).unwrap();
        for axis in Axis::ALL {
            let r = oscillator_length(&b, axis) / oscillator_length(&a, axis);
            prop_assert!((r * s.sqrt() - 1.0).abs() < 1e-12);
            let r = lamb_dicke(&b, axis).unwrap() / lamb_dicke(&a, axis).unwrap();
            prop_assert!((r * s.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn splitting_is_linear_in_field_and_g(b in 0.0f64..2.0, g in 0.05f64..2.0, s in 0.1f64..10.0) {
        let f1 = FieldConfig { b_off: b, lande_g: g, ..FieldConfig::default() };
        let f2 = FieldConfig { b_off: b * s, lande_g: g, ..FieldConfig::default() };
        let f3 = FieldConfig { b_off: b, lande_g: g * s, ..FieldConfig::default() };
        let d = zeeman_splitting(&f1);
        prop_assert!((zeeman_splitting(&f2) - s * d).abs() <= 1e-12 * (s * d).abs());
        prop_assert!((zeeman_splitting(&f3) - s * d).abs() <= 1e-12 * (s * d).abs());
    }

    #[test]
    fn coupling_scales_with_gradient_and_frequency(bg in 1e4f64..1e7, s in 0.25f64..4.0, f in 50.0f64..300.0) {
        let t = TrapConfig::cesium_khz([136.0, f, 215.0], [25; 3]).unwrap();
        let t2 = TrapConfig::cesium_khz([136.0, f * s, 215.0], [25; 3]).unwrap();
        let field = FieldConfig { b_gradient: bg, ..FieldConfig::default() };
        let field2 = FieldConfig { b_gradient: bg * s, ..FieldConfig::default() };
        let w = spin_motion_coupling(&t, &field);
        prop_assert!((spin_motion_coupling(&t, &field2) / (s * w) - 1.0).abs() < 1e-12);
        prop_assert!((spin_motion_coupling(&t2, &field) * s.sqrt() / w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_field_inverts_splitting(f in 10.0f64..500.0, g in 0.05f64..1.0) {
        let t = TrapConfig::cesium_khz([f, f, f], [25; 3]).unwrap();
        let field = FieldConfig { lande_g: g, ..FieldConfig::default() };
        for axis in Axis::ALL {
            let b = resonant_field(&t, &field, axis);
            let w = zeeman_splitting(&field.with_offset(b));
            prop_assert!((w / t.omega(axis) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_limit_is_exact(w in 1e5f64..3e6, n in 0usize..100) {
        prop_assert_eq!(level_energy_rad(w, 0.0, n), w * (n as f64 + 0.5));
    }
}
