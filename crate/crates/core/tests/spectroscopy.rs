//! Sideband rates, the spectrum forward model and sideband-ratio thermometry.

use std::f64::consts::PI;

use drc_core::spectroscopy::{
    ground_state_occupation, integrate_band, scattering_rates, sideband_thermometry, synthesize_spectrum,
    FrequencyGrid, LineModel, Spectrum,
};
use drc_core::{Axis, TrapConfig};
use proptest::prelude::*;

fn model(mean_n: [f64; 3], alpha: f64) -> LineModel {
    let mut trap = TrapConfig::cesium_khz([154.0, 94.0, 233.0], [25; 3]).unwrap();
    trap.anharmonicity = [alpha; 3];
    LineModel::from_trap(&trap, mean_n, 1e5, 500.0, 1.0, 0.0).unwrap()
}

fn lorentz(f: f64, c: f64, fwhm: f64) -> f64 {
    let g = fwhm / 2.0;
    g / PI / ((f - c).powi(2) + g * g)
}

/// Summed red (n → n−1) and blue (n → n+1) weights of one axis.
fn sideband_weights(m: &LineModel, axis: Axis) -> (f64, f64) {
    let comps = m.components();
    let sum = |red: bool| {
        comps
            .iter()
            .filter(|c| c.axis == Some(axis) && (c.n_final < c.n_initial) == red)
            .map(|c| c.rate)
            .sum::<f64>()
    };
    (sum(true), sum(false))
}

#[test]
fn rates_for_one_quantum() {
    let r = scattering_rates(1, 0.158, 1e5).unwrap();
    assert!((r.red - 0.158f64.powi(2) * 1e5).abs() < 1e-9);
    assert!((r.red - 2.50e3).abs() < 10.0);
    assert!((r.blue - 2.0 * r.red).abs() < 1e-9);
    assert!((r.carrier - (1.0 - 3.0 * 0.158f64.powi(2)) * 1e5).abs() < 1e-9);
}

#[test]
fn lamb_dicke_violation_rejected() {
    assert!(scattering_rates(0, 0.6, 1e5).is_err());
}

#[test]
fn thermometry_round_trip_from_weights() {
    for nbar in [0.0, 0.05, 0.22, 0.58, 1.0, 3.0] {
        let m = model([nbar; 3], 0.0);
        for axis in Axis::ALL {
            let (red, blue) = sideband_weights(&m, axis);
            let t = sideband_thermometry(red, blue, 0.0, 0.0).unwrap();
            assert!((t.mean_n - nbar).abs() < 1e-6, "{axis:?}: {} vs {nbar}", t.mean_n);
        }
    }
}

#[test]
fn quadrature_ratio_of_one_axis() {
    // Narrow lines keep the tail of each sideband inside the other window
    // below 1e-7; the mirror-symmetric grid makes discretization errors cancel.
    let nbar = 0.4;
    let mut m = model([nbar, nbar, nbar], 0.0);
    m.rate_broadening = false;
    m.min_width = 0.5;
    let grid = FrequencyGrid::symmetric(120e3, 0.1).unwrap();
    let freqs = grid.frequencies();
    let comps: Vec<_> = m.components().into_iter().filter(|c| c.axis == Some(Axis::Y)).collect();
    let psd: Vec<f64> =
        freqs.iter().map(|&f| comps.iter().map(|c| c.rate * lorentz(f, c.center_frequency, c.width)).sum()).collect();
    let s = Spectrum::new(grid, psd).unwrap();
    let fy = m.omega[1] / (2.0 * PI);
    let red = integrate_band(&s, -fy - 20e3, -fy + 20e3).unwrap();
    let blue = integrate_band(&s, fy - 20e3, fy + 20e3).unwrap();
    let want = nbar / (nbar + 1.0);
    assert!((red / blue - want).abs() < 1e-7, "{} vs {want}", red / blue);
}

#[test]
fn ground_state_has_no_red_sideband() {
    let m = model([0.0; 3], 0.0);
    let comps = m.components();
    assert!(comps.iter().all(|c| c.n_final >= c.n_initial));
    // At −f the PSD is the offset plus tails of the carrier and blue lines only.
    let fy = m.omega[1] / (2.0 * PI);
    let got = m.evaluate(&[-fy])[0];
    let want: f64 = comps.iter().map(|c| c.rate * lorentz(-fy, c.center_frequency, c.width)).sum::<f64>()
        / m.scattering_rate
        + m.offset;
    assert!((got - want).abs() <= 1e-12 * want);
    let carrier = comps.last().unwrap();
    let carrier_only = carrier.rate * lorentz(-fy, 0.0, carrier.width) / m.scattering_rate;
    assert!(got < 1.5 * carrier_only);
}

#[test]
fn reference_occupations() {
    let r: f64 = 0.22 / 1.22;
    assert!((r - 0.180).abs() < 5e-4);
    let t = sideband_thermometry(r, 1.0, 0.0, 0.0).unwrap();
    assert!((t.mean_n - 0.22).abs() < 1e-12);
    assert!((t.ground_state - 0.82).abs() < 5e-3);
    assert!((ground_state_occupation(2.5) - 0.286).abs() < 5e-4);
}

#[test]
fn anharmonic_blue_sideband_drifts_and_spreads_with_temperature() {
    let moments = |nbar: f64| {
        let m = model([nbar; 3], 0.01);
        let blue: Vec<_> =
            m.components().into_iter().filter(|c| c.axis == Some(Axis::Z) && c.n_final > c.n_initial).collect();
        let w: f64 = blue.iter().map(|c| c.rate).sum();
        let mean = blue.iter().map(|c| c.rate * c.center_frequency).sum::<f64>() / w;
        let var = blue.iter().map(|c| c.rate * (c.center_frequency - mean).powi(2)).sum::<f64>() / w;
        (mean, var.sqrt())
    };
    let mut prev = moments(0.1);
    for nbar in [0.3, 1.0, 2.5] {
        let cur = moments(nbar);
        assert!(cur.0 < prev.0, "centroid {} !< {}", cur.0, prev.0);
        assert!(cur.1 > prev.1, "spread {} !> {}", cur.1, prev.1);
        prev = cur;
    }
}

#[test]
fn synthesis_rejects_coarse_grid() {
    let m = model([0.2; 3], 0.0);
    let grid = FrequencyGrid::symmetric(400e3, 200.0).unwrap();
    assert!(synthesize_spectrum(&m, &grid).is_err());
    let grid = FrequencyGrid::symmetric(400e3, 50.0).unwrap();
    let s = synthesize_spectrum(&m, &grid).unwrap();
    assert!(s.psd.iter().all(|p| *p >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn red_to_blue_is_n_over_n_plus_one(n in 1usize..30, eta in 0.01f64..0.2, g in 1e3f64..1e6) {
        let r = scattering_rates(n, eta, g).unwrap();
        prop_assert!((r.red / r.blue - n as f64 / (n as f64 + 1.0)).abs() < 1e-12);
        prop_assert!((r.red + r.carrier + r.blue - g).abs() < 1e-9 * g || r.carrier == 0.0);
    }

    #[test]
    fn component_weights_conserve_power(
        nx in 0.0f64..3.0, ny in 0.0f64..3.0, nz in 0.0f64..3.0, alpha in 0.0f64..0.005,
    ) {
        let m = model([nx, ny, nz], alpha);
        let total: f64 = m.components().iter().map(|c| c.rate).sum();
        prop_assert!((total / m.scattering_rate - 1.0).abs() < 1e-12);
    }
}
