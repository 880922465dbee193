//! Spectrum fit: Jacobian, parameterization invariance, error calibration and
//! failure modes.

use std::f64::consts::PI;

use drc_core::fitting::{
    fit_report, fit_spectrum, initial_guess, model_jacobian, FitBounds, FitModelParams, FitOptions, FixedInputs,
    OccupationParameterization,
};
use drc_core::rng::{derive_seed, rng_from_seed};
use drc_core::spectroscopy::{synthesize_spectrum, FrequencyGrid, LineModel, Spectrum};
use drc_core::{Error, TrapConfig};
use proptest::prelude::*;
use rand_distr::{Distribution, Gamma};

fn truth_model() -> LineModel {
    let trap = TrapConfig::cesium_khz([154.0, 94.0, 233.0], [25; 3]).unwrap();
    LineModel::from_trap(&trap, [1.4, 0.58, 0.22], 1e5, 1e4, 1.0, 1e-7).unwrap()
}

fn grid() -> FrequencyGrid {
    FrequencyGrid::symmetric(400e3, 1000.0).unwrap()
}

fn params_of(m: &LineModel) -> FitModelParams {
    FitModelParams {
        mean_n: m.mean_n,
        omega: m.omega,
        min_width: m.min_width,
        amplitude: m.amplitude,
        offset: m.offset,
        anharmonicity: m.anharmonicity,
    }
}

fn fixed_of(m: &LineModel) -> FixedInputs {
    FixedInputs { lamb_dicke: m.lamb_dicke, scattering_rate: m.scattering_rate, rate_broadening: m.rate_broadening }
}

fn model_at(p: &FitModelParams, fixed: &FixedInputs) -> LineModel {
    LineModel {
        omega: p.omega,
        anharmonicity: p.anharmonicity,
        lamb_dicke: fixed.lamb_dicke,
        mean_n: p.mean_n,
        scattering_rate: fixed.scattering_rate,
        min_width: p.min_width,
        amplitude: p.amplitude,
        offset: p.offset,
        rate_broadening: fixed.rate_broadening,
    }
}

/// Averaged-periodogram noise: each bin is Gamma(K, psd/K).
fn noisy(clean: &Spectrum, averages: usize, seed: u64) -> Spectrum {
    let mut rng = rng_from_seed(seed);
    let k = averages as f64;
    let psd = clean.psd.iter().map(|&p| Gamma::new(k, p / k).unwrap().sample(&mut rng)).collect();
    let mut s = Spectrum::new(clean.grid, psd).unwrap();
    s.averages = averages;
    s
}

/// Physical parameters in fit order, with the matching setter.
fn perturb(p: &FitModelParams, j: usize, h: f64) -> FitModelParams {
    let mut q = *p;
    match j {
        0..=2 => q.mean_n[j] += h,
        3..=5 => q.omega[j - 3] += h,
        6 => q.min_width += h,
        7 => q.amplitude += h,
        _ => q.offset += h,
    }
    q
}

fn value(p: &FitModelParams, j: usize) -> f64 {
    match j {
        0..=2 => p.mean_n[j],
        3..=5 => p.omega[j - 3],
        6 => p.min_width,
        7 => p.amplitude,
        _ => p.offset,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jacobian_matches_five_point_stencil(
        nx in 0.05f64..3.0, ny in 0.05f64..3.0, nz in 0.05f64..3.0,
        scale in 0.8f64..1.2, width in 3e3f64..2e4, log1p in any::<bool>(),
    ) {
        let m = truth_model();
        let data = synthesize_spectrum(&m, &grid()).unwrap();
        let fixed = fixed_of(&m);
        let mut p = params_of(&m);
        p.mean_n = [nx, ny, nz];
        p.omega = p.omega.map(|w| w * scale);
        p.min_width = width;
        let parameterization = if log1p { OccupationParameterization::Log1p } else { OccupationParameterization::Direct };
        let options = FitOptions { parameterization, ..FitOptions::default() };
        let (jac, names) = model_jacobian(&data, &p, &fixed, &options).unwrap();
        prop_assert_eq!(names.len(), 9);
        let freqs = data.frequencies();
        for j in 0..9 {
            let h = 1e-7 * value(&p, j).abs().max(1e-7);
            let eval = |k: f64| model_at(&perturb(&p, j, k * h), &fixed).evaluate(&freqs);
            let (m2, m1, p1, p2) = (eval(-2.0), eval(-1.0), eval(1.0), eval(2.0));
            let col: Vec<f64> = (0..freqs.len()).map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h)).collect();
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diff = (0..freqs.len()).map(|i| (jac[(i, j)] - col[i]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(diff <= 1e-4 * norm, "{}: relative difference {:e}", names[j], diff / norm);
        }
    }
}

#[test]
fn parameterization_does_not_move_the_optimum() {
    let m = truth_model();
    let data = noisy(&synthesize_spectrum(&m, &grid()).unwrap(), 100, 7);
    let fixed = fixed_of(&m);
    let init = params_of(&m);
    let fit = |parameterization| {
        let options = FitOptions { parameterization, ..FitOptions::default() };
        fit_spectrum(&data, &init, &fixed, &FitBounds::around(&init), &options).unwrap()
    };
    let a = fit(OccupationParameterization::Log1p);
    let b = fit(OccupationParameterization::Direct);
    assert!(a.converged && b.converged);
    for i in 0..3 {
        assert!((a.params.mean_n[i] / b.params.mean_n[i] - 1.0).abs() < 1e-6);
        assert!((a.params.omega[i] / b.params.omega[i] - 1.0).abs() < 1e-6);
        assert!((a.uncertainties.mean_n[i] / b.uncertainties.mean_n[i] - 1.0).abs() < 1e-3);
    }
}

#[test]
fn reported_errors_match_scatter_over_seeds() {
    let m = truth_model();
    let clean = synthesize_spectrum(&m, &grid()).unwrap();
    let fixed = fixed_of(&m);
    let init = params_of(&m);
    let options = FitOptions { inverse_variance: true, ..FitOptions::default() };
    let (mut values, mut sigmas) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let data = noisy(&clean, 100, derive_seed(11, seed));
        let r = fit_spectrum(&data, &init, &fixed, &FitBounds::around(&init), &options).unwrap();
        assert!(r.converged);
        values.push(r.params.mean_n[2]);
        sigmas.push(r.uncertainties.mean_n[2]);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sigma = sigmas.iter().sum::<f64>() / n;
    assert!(std / sigma > 0.5 && std / sigma < 2.0, "scatter {std:e} vs reported {sigma:e}");
    assert!((mean - 0.22).abs() < 3.0 * std, "mean {mean} vs 0.22");
}

#[test]
fn accepted_steps_never_increase_the_residual() {
    let m = truth_model();
    let data = noisy(&synthesize_spectrum(&m, &grid()).unwrap(), 30, 3);
    let fixed = fixed_of(&m);
    let mut init = params_of(&m);
    init.mean_n = [1.0, 0.8, 0.4];
    init.omega = init.omega.map(|w| w * 1.05);
    let r = fit_spectrum(&data, &init, &fixed, &FitBounds::around(&init), &FitOptions::default()).unwrap();
    assert!(r.history.len() >= 2);
    for w in r.history.windows(2) {
        assert!(w[1] <= w[0], "{} after {}", w[1], w[0]);
    }
}

#[test]
fn flat_spectrum_is_singular() {
    let m = truth_model();
    let g = grid();
    let data = Spectrum::new(g, vec![1e-6; g.len]).unwrap();
    let init = initial_guess(&data, m.omega, m.min_width).unwrap();
    let err = fit_spectrum(&data, &init, &fixed_of(&m), &FitBounds::around(&init), &FitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::SingularNormalMatrix(_)), "{err:?}");
}

#[test]
fn start_outside_bounds_is_rejected() {
    let m = truth_model();
    let data = synthesize_spectrum(&m, &grid()).unwrap();
    let mut init = params_of(&m);
    let bounds = FitBounds::around(&init);
    init.mean_n[1] = 60.0;
    let err = fit_spectrum(&data, &init, &fixed_of(&m), &bounds, &FitOptions::default()).unwrap_err();
    match err {
        Error::BoundsViolation { name, value, .. } => {
            assert_eq!(name, "mean_n_y");
            assert_eq!(value, 60.0);
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn report_of_a_converged_fit() {
    let m = truth_model();
    let data = synthesize_spectrum(&m, &grid()).unwrap();
    let mut init = params_of(&m);
    init.mean_n = [0.10, 0.58, 0.22];
    let mut truth = m.clone();
    truth.mean_n = init.mean_n;
    let data2 = synthesize_spectrum(&truth, &data.grid).unwrap();
    let mut r = fit_spectrum(&data2, &init, &fixed_of(&m), &FitBounds::around(&init), &FitOptions::default()).unwrap();
    assert!(r.converged);
    let ab_initio = [136.0, 83.0, 215.0].map(|f: f64| 2.0 * PI * f * 1e3);
    let rep = fit_report(&r, ab_initio).unwrap();
    assert_eq!((100.0 * rep.axes[0].ground_state).round(), 91.0);
    assert!((rep.axes[1].deviation - (94.0 / 83.0 - 1.0)).abs() < 1e-6);
    assert_eq!((100.0 * rep.axes[1].deviation).round(), 13.0);
    // 10 kHz lines fit inside 10 % of 154 and 233 kHz but not of 94 kHz.
    let flags: Vec<bool> = rep.axes.iter().map(|a| a.width_within_inhomogeneity).collect();
    assert_eq!(flags, [true, false, true]);
    r.converged = false;
    assert!(matches!(fit_report(&r, ab_initio), Err(Error::NotConverged)));
}
