//! Fit of the sideband spectrum model to a measured PSD.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::spectroscopy::{ground_state_occupation, integrate_band, sideband_thermometry, LineModel, Spectrum};
use crate::trap::Axis;

use super::lm::{
    check_bounds, covariance, levenberg_marquardt, normal_matrix_conditioning, numerical_jacobian,
    LeastSquaresProblem, LmOptions,
};

/// Fitted quantities in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitModelParams {
    pub mean_n: [f64; 3],
    /// Trap frequencies (rad/s).
    pub omega: [f64; 3],
    /// Hz.
    pub min_width: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Only varied when released in [`FitOptions`].
    pub anharmonicity: [f64; 3],
}

/// Inputs held fixed during the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedInputs {
    pub lamb_dicke: [f64; 3],
    pub scattering_rate: f64,
    pub rate_broadening: bool,
}

/// How the occupations are represented inside the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupationParameterization {
    Direct,
    /// u = ln(1 + n̄).
    Log1p,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub lower: FitModelParams,
    pub upper: FitModelParams,
}

impl FitBounds {
    /// Loose box around a starting point: occupations in [0, 50], trap
    /// frequencies within ±30 %, widths from 10 Hz to 200 kHz, amplitude
    /// non-negative, offset free, anharmonicities in [0, 0.02].
    pub fn around(p: &FitModelParams) -> Self {
        FitBounds {
            lower: FitModelParams {
                mean_n: [0.0; 3],
                omega: p.omega.map(|w| 0.7 * w),
                min_width: 10.0,
                amplitude: 0.0,
                offset: f64::NEG_INFINITY,
                anharmonicity: [0.0; 3],
            },
            upper: FitModelParams {
                mean_n: [50.0; 3],
                omega: p.omega.map(|w| 1.3 * w),
                min_width: 200e3,
                amplitude: f64::INFINITY,
                offset: f64::INFINITY,
                anharmonicity: [0.02; 3],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    pub parameterization: OccupationParameterization,
    pub release_anharmonicity: bool,
    /// Weight residuals by 1/σ with σ = psd/√averages.
    pub inverse_variance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lm: LmOptions::default(),
            parameterization: OccupationParameterization::Log1p,
            release_anharmonicity: false,
            inverse_variance: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    MeanN(usize),
    Omega(usize),
    MinWidth,
    Amplitude,
    Offset,
    Anharmonicity(usize),
}

impl Param {
    fn name(self) -> &'static str {
        const N: [&str; 3] = ["mean_n_x", "mean_n_y", "mean_n_z"];
        const W: [&str; 3] = ["omega_x", "omega_y", "omega_z"];
        const A: [&str; 3] = ["alpha_x", "alpha_y", "alpha_z"];
        match self {
            Param::MeanN(i) => N[i],
            Param::Omega(i) => W[i],
            Param::MinWidth => "min_width",
            Param::Amplitude => "amplitude",
            Param::Offset => "offset",
            Param::Anharmonicity(i) => A[i],
        }
    }

    fn get(self, p: &FitModelParams) -> f64 {
        match self {
            Param::MeanN(i) => p.mean_n[i],
            Param::Omega(i) => p.omega[i],
            Param::MinWidth => p.min_width,
            Param::Amplitude => p.amplitude,
            Param::Offset => p.offset,
            Param::Anharmonicity(i) => p.anharmonicity[i],
        }
    }

    fn set(self, p: &mut FitModelParams, v: f64) {
        match self {
            Param::MeanN(i) => p.mean_n[i] = v,
            Param::Omega(i) => p.omega[i] = v,
            Param::MinWidth => p.min_width = v,
            Param::Amplitude => p.amplitude = v,
            Param::Offset => p.offset = v,
            Param::Anharmonicity(i) => p.anharmonicity[i] = v,
        }
    }
}

fn param_list(release_anharmonicity: bool) -> Vec<Param> {
    let mut v: Vec<Param> = (0..3).map(Param::MeanN).chain((0..3).map(Param::Omega)).collect();
    v.extend([Param::MinWidth, Param::Amplitude, Param::Offset]);
    if release_anharmonicity {
        v.extend((0..3).map(Param::Anharmonicity));
    }
    v
}

fn line_model(p: &FitModelParams, fixed: &FixedInputs) -> LineModel {
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

struct SpectrumProblem<'a> {
    freqs: Vec<f64>,
    data: &'a [f64],
    inv_sigma: Option<Vec<f64>>,
    base: FitModelParams,
    fixed: FixedInputs,
    params: Vec<Param>,
    parameterization: OccupationParameterization,
    bounds: Vec<(f64, f64)>,
    scales: Vec<f64>,
}

impl SpectrumProblem<'_> {
    fn to_internal(&self, p: Param, v: f64) -> f64 {
        match (p, self.parameterization) {
            (Param::MeanN(_), OccupationParameterization::Log1p) => v.ln_1p(),
            _ => v,
        }
    }

    /// d(physical)/d(internal) at internal value `u`.
    fn chain_factor(&self, p: Param, u: f64) -> f64 {
        match (p, self.parameterization) {
            (Param::MeanN(_), OccupationParameterization::Log1p) => u.exp(),
            _ => 1.0,
        }
    }

    fn physical(&self, theta: &[f64]) -> FitModelParams {
        let mut p = self.base;
        for (&k, &u) in self.params.iter().zip(theta) {
            let v = match (k, self.parameterization) {
                (Param::MeanN(_), OccupationParameterization::Log1p) => u.exp_m1(),
                _ => u,
            };
            k.set(&mut p, v);
        }
        p
    }

    fn internal(&self, p: &FitModelParams) -> Vec<f64> {
        self.params.iter().map(|&k| self.to_internal(k, k.get(p))).collect()
    }
}

impl LeastSquaresProblem for SpectrumProblem<'_> {
    fn n_params(&self) -> usize {
        self.params.len()
    }
    fn n_residuals(&self) -> usize {
        self.freqs.len()
    }
    fn residuals(&self, theta: &[f64], out: &mut [f64]) {
        let model = line_model(&self.physical(theta), &self.fixed);
        if model.validate().is_err() {
            out.iter_mut().for_each(|o| *o = f64::NAN);
            return;
        }
        let psd = model.evaluate(&self.freqs);
        for k in 0..out.len() {
            let r = psd[k] - self.data[k];
            out[k] = match &self.inv_sigma {
                Some(w) => r * w[k],
                None => r,
            };
        }
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.clone()
    }
    fn typical_scale(&self, j: usize) -> f64 {
        self.scales[j]
    }
}

/// Outcome of a spectrum fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: FitModelParams,
    /// One-sigma errors (zero for parameters that were not fitted).
    pub uncertainties: FitModelParams,
    /// Names of the covariance rows and columns.
    pub names: Vec<&'static str>,
    /// Covariance of the fitted physical parameters.
    pub covariance: DMatrix<f64>,
    /// Euclidean norm of the (weighted) residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Squared residual norm after every accepted iteration.
    pub history: Vec<f64>,
}

/// Smallest normalized eigenvalue of the normal matrix tolerated at the start.
const MIN_CONDITIONING: f64 = 1e-14;

fn build_problem<'a>(
    data: &'a Spectrum,
    initial: &FitModelParams,
    fixed: &FixedInputs,
    bounds: &FitBounds,
    options: &FitOptions,
) -> SpectrumProblem<'a> {
    let params = param_list(options.release_anharmonicity);
    let inv_sigma = options.inverse_variance.then(|| {
        let avg = data.averages.max(1) as f64;
        let floor = data.psd.iter().copied().fold(0.0, f64::max) * 1e-12 + f64::MIN_POSITIVE;
        data.psd.iter().map(|&p| avg.sqrt() / p.max(floor)).collect()
    });
    let psd_scale = data.psd.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut prob = SpectrumProblem {
        freqs: data.frequencies(),
        data: &data.psd,
        inv_sigma,
        base: *initial,
        fixed: *fixed,
        params: params.clone(),
        parameterization: options.parameterization,
        bounds: Vec::new(),
        scales: Vec::new(),
    };
    prob.bounds = params
        .iter()
        .map(|&k| (prob.to_internal(k, k.get(&bounds.lower)), prob.to_internal(k, k.get(&bounds.upper))))
        .collect();
    prob.scales = params
        .iter()
        .map(|&k| match k {
            Param::MeanN(_) => 0.1,
            Param::Omega(_) => 2.0 * PI * 1e4,
            Param::MinWidth => 1e3,
            Param::Amplitude => initial.amplitude.abs().max(1e-300),
            Param::Offset => 1e-3 * psd_scale,
            Param::Anharmonicity(_) => 1e-3,
        })
        .collect();
    prob
}

/// Least-squares fit of the spectrum model to `data`.
pub fn fit_spectrum(
    data: &Spectrum,
    initial: &FitModelParams,
    fixed: &FixedInputs,
    bounds: &FitBounds,
    options: &FitOptions,
) -> Result<FitResult> {
    let prob = build_problem(data, initial, fixed, bounds, options);
    let names: Vec<&'static str> = prob.params.iter().map(|k| k.name()).collect();
    let lower = prob.internal(&bounds.lower);
    let upper = prob.internal(&bounds.upper);
    let theta0 = prob.internal(initial);
    for (j, &k) in prob.params.iter().enumerate() {
        let v = k.get(initial);
        if !(theta0[j] >= lower[j] && theta0[j] <= upper[j]) {
            return Err(Error::BoundsViolation {
                name: k.name().to_string(),
                value: v,
                lower: k.get(&bounds.lower),
                upper: k.get(&bounds.upper),
            });
        }
    }
    check_bounds(&prob, &theta0, &names)?;
    line_model(initial, fixed).validate()?;

    let j0 = numerical_jacobian(&prob, &theta0, options.lm.relative_step);
    let cond = normal_matrix_conditioning(&j0, &names)?;
    if !(cond > MIN_CONDITIONING) {
        return Err(Error::SingularNormalMatrix(format!("normalized normal matrix eigenvalue {cond:.3e}")));
    }
    let out = levenberg_marquardt(&prob, &theta0, &options.lm)?;
    let params = prob.physical(&out.params);

    // Jacobian with respect to the physical parameters.
    let mut jac = out.jacobian.clone();
    for (j, &k) in prob.params.iter().enumerate() {
        let f = prob.chain_factor(k, out.params[j]);
        jac.column_mut(j).scale_mut(1.0 / f);
    }
    normal_matrix_conditioning(&jac, &names)?;
    let cov = covariance(&jac, out.ssr)?;
    let mut unc = FitModelParams {
        mean_n: [0.0; 3],
        omega: [0.0; 3],
        min_width: 0.0,
        amplitude: 0.0,
        offset: 0.0,
        anharmonicity: [0.0; 3],
    };
    for (j, &k) in prob.params.iter().enumerate() {
        k.set(&mut unc, cov[(j, j)].max(0.0).sqrt());
    }
    Ok(FitResult {
        params,
        uncertainties: unc,
        names,
        covariance: cov,
        residual_norm: out.residual_norm,
        iterations: out.iterations,
        converged: out.converged,
        history: out.history,
    })
}

/// Jacobian of the model PSD on the grid of `data` with respect to the
/// physical fit parameters at `params`, computed through the same internal
/// coordinates and finite-difference steps as [`fit_spectrum`].
pub fn model_jacobian(
    data: &Spectrum,
    params: &FitModelParams,
    fixed: &FixedInputs,
    options: &FitOptions,
) -> Result<(DMatrix<f64>, Vec<&'static str>)> {
    line_model(params, fixed).validate()?;
    let bounds = FitBounds::around(params);
    let prob = build_problem(data, params, fixed, &bounds, options);
    let theta = prob.internal(params);
    let mut jac = numerical_jacobian(&prob, &theta, options.lm.relative_step);
    for (j, &k) in prob.params.iter().enumerate() {
        let f = prob.chain_factor(k, theta[j]);
        jac.column_mut(j).scale_mut(1.0 / f);
    }
    Ok((jac, prob.params.iter().map(|k| k.name()).collect()))
}

/// Independent fits from `starts` perturbed initial points; the smallest
/// residual wins, ties going to the lower start index. Start 0 is the
/// unperturbed `initial`; start k > 0 scales every parameter by a factor
/// drawn uniformly from [1 − spread, 1 + spread] with seed `derive_seed(seed, k)`.
#[allow(clippy::too_many_arguments)]
pub fn fit_spectrum_multistart(
    data: &Spectrum,
    initial: &FitModelParams,
    fixed: &FixedInputs,
    bounds: &FitBounds,
    options: &FitOptions,
    starts: usize,
    spread: f64,
    seed: u64,
) -> Result<FitResult> {
    let params = param_list(options.release_anharmonicity);
    let points: Vec<FitModelParams> = (0..starts.max(1))
        .map(|k| {
            let mut p = *initial;
            if k > 0 {
                let mut rng = rng_from_seed(derive_seed(seed, k as u64));
                for &q in &params {
                    let f = 1.0 + spread * (2.0 * rng.random::<f64>() - 1.0);
                    let v = (q.get(&p) * f).clamp(q.get(&bounds.lower), q.get(&bounds.upper));
                    q.set(&mut p, v);
                }
            }
            p
        })
        .collect();
    let results: Vec<Result<FitResult>> =
        points.par_iter().map(|p| fit_spectrum(data, p, fixed, bounds, options)).collect();
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.residual_norm < b.residual_norm) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::NotConverged))
}

fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i];
    }
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(n);
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect()
}

fn quantile(x: &[f64], q: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}

/// Starting point read off the data.
///
/// Trap frequencies come from the three most prominent local maxima of the
/// smoothed PSD at positive frequency, assigned to axes by closeness to
/// `ab_initio_omega`; an axis without a peak keeps its ab initio value.
/// Occupations come from the raw sideband integrals and the amplitude from
/// the integrated excess power.
pub fn initial_guess(data: &Spectrum, ab_initio_omega: [f64; 3], min_width: f64) -> Result<FitModelParams> {
    let g = data.grid;
    let offset = quantile(&data.psd, 0.1);
    let half = ((0.25 * min_width / g.step).round() as usize).max(1);
    let smooth = moving_average(&data.psd, half);
    let f_ab: Vec<f64> = ab_initio_omega.iter().map(|w| w / (2.0 * PI)).collect();
    let lo = 0.3 * f_ab.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = 1.7 * f_ab.iter().copied().fold(0.0, f64::max);
    let guard = ((min_width / g.step).round() as usize).max(1);
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 0..g.len {
        let f = g.frequency(k);
        if f < lo || f > hi {
            continue;
        }
        let a = k.saturating_sub(guard);
        let b = (k + guard).min(g.len - 1);
        if (a..=b).all(|j| j == k || smooth[j] < smooth[k]) {
            // Prominence above the lower of the two flanking minima, so that
            // noise ripples on the carrier tail rank below real sidebands.
            let left = smooth[k.saturating_sub(3 * guard)..k].iter().copied().fold(f64::INFINITY, f64::min);
            let right = smooth[k + 1..(k + 3 * guard + 1).min(g.len)].iter().copied().fold(f64::INFINITY, f64::min);
            peaks.push((f, smooth[k] - left.max(right)));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    peaks.truncate(3);
    // Assign peaks to distinct axes; axes left without a peak keep their
    // ab initio frequency.
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let cost = |p: &[usize; 3]| {
        (0..peaks.len()).map(|j| ((peaks[j].0 - f_ab[p[j]]) / f_ab[p[j]]).abs()).sum::<f64>()
    };
    let best = perms.iter().min_by(|a, b| cost(a).total_cmp(&cost(b))).unwrap();
    let mut omega = ab_initio_omega;
    for (j, peak) in peaks.iter().enumerate() {
        omega[best[j]] = 2.0 * PI * peak.0;
    }

    let mut mean_n = [0.5; 3];
    for i in 0..3 {
        let f = omega[i] / (2.0 * PI);
        let w = min_width.min(0.3 * f);
        let band = |c: f64| integrate_band(data, c - w, c + w).map(|v| v - offset * 2.0 * w);
        if let (Ok(sm), Ok(sp)) = (band(-f), band(f)) {
            if let Ok(t) = sideband_thermometry(sm.max(0.0), sp, 0.0, 0.0) {
                mean_n[i] = t.mean_n.clamp(0.01, 10.0);
            }
        }
    }
    let total = integrate_band(data, g.start, g.end())? - offset * (g.end() - g.start);
    Ok(FitModelParams {
        mean_n,
        omega,
        min_width,
        amplitude: total.max(0.0),
        offset,
        anharmonicity: [0.0; 3],
    })
}

/// Per-axis summary of a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisReport {
    pub axis: Axis,
    pub mean_n: f64,
    pub mean_n_err: f64,
    pub ground_state: f64,
    pub frequency_khz: f64,
    pub frequency_err_khz: f64,
    pub ab_initio_khz: f64,
    /// (fitted − ab initio) / ab initio.
    pub deviation: f64,
    /// Whether the minimum width is at most 10 % of the trap frequency.
    pub width_within_inhomogeneity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub axes: [AxisReport; 3],
    pub min_width_khz: f64,
    pub min_width_err_khz: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Human-oriented summary of a converged fit.
pub fn fit_report(result: &FitResult, ab_initio_omega: [f64; 3]) -> Result<FitReport> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let p = &result.params;
    let u = &result.uncertainties;
    let axes = Axis::ALL.map(|a| {
        let i = a.index();
        let f = p.omega[i] / (2.0 * PI) * 1e-3;
        let fa = ab_initio_omega[i] / (2.0 * PI) * 1e-3;
        AxisReport {
            axis: a,
            mean_n: p.mean_n[i],
            mean_n_err: u.mean_n[i],
            ground_state: ground_state_occupation(p.mean_n[i]),
            frequency_khz: f,
            frequency_err_khz: u.omega[i] / (2.0 * PI) * 1e-3,
            ab_initio_khz: fa,
            deviation: (f - fa) / fa,
            width_within_inhomogeneity: p.min_width * 1e-3 <= 0.1 * f,
        }
    });
    Ok(FitReport {
        axes,
        min_width_khz: p.min_width * 1e-3,
        min_width_err_khz: u.min_width * 1e-3,
        residual_norm: result.residual_norm,
        iterations: result.iterations,
    })
}
