//! Exponential lifetime of a survival curve.

use crate::error::{Error, Result};
use crate::fitting::{covariance, levenberg_marquardt, LeastSquaresProblem, LmOptions};

/// Fitted time constant of S(t) = exp(−t/τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifetime {
    /// τ (s).
    pub tau: f64,
    /// One-sigma standard error of τ (s).
    pub tau_err: f64,
}

struct DecayProblem<'a> {
    t: &'a [f64],
    s: &'a [f64],
    rate_scale: f64,
}

impl LeastSquaresProblem for DecayProblem<'_> {
    fn n_params(&self) -> usize {
        1
    }
    fn n_residuals(&self) -> usize {
        self.t.len()
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &t), &s) in out.iter_mut().zip(self.t).zip(self.s) {
            *o = (-p[0] * t).exp() - s;
        }
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, f64::INFINITY)]
    }
    fn typical_scale(&self, _: usize) -> f64 {
        self.rate_scale
    }
}

/// Least-squares fit of exp(−t/τ) to a decreasing survival curve sampled at `times`.
pub fn survival_lifetime(times: &[f64], survival: &[f64]) -> Result<Lifetime> {
    if times.len() != survival.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: survival.len() });
    }
    if times.len() < 10 {
        return Err(Error::FitDiverged(format!("need at least 10 samples, got {}", times.len())));
    }
    if survival.windows(2).any(|w| w[1] > w[0]) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::FitDiverged("survival must be non-increasing on increasing times".into()));
    }
    let first = survival[0];
    let last = *survival.last().unwrap();
    if !(last < first) || !(last > 0.0) {
        return Err(Error::FitDiverged("survival curve has no measurable decay".into()));
    }
    // Log-linear slope through the origin as the starting rate.
    let (num, den) = times
        .iter()
        .zip(survival)
        .filter(|(_, &s)| s > 0.0)
        .fold((0.0, 0.0), |(a, b), (&t, &s)| (a - t * s.ln(), b + t * t));
    let k0 = if den > 0.0 { (num / den).max(f64::MIN_POSITIVE) } else { 0.0 };
    if !(k0 > 0.0) {
        return Err(Error::FitDiverged("survival curve has no measurable decay".into()));
    }
    let problem = DecayProblem { t: times, s: survival, rate_scale: k0 };
    let out = levenberg_marquardt(&problem, &[k0], &LmOptions::default())?;
    let k = out.params[0];
    if !(k > 0.0) {
        return Err(Error::FitDiverged("fitted decay rate is not positive".into()));
    }
    let k_err = if out.ssr > 0.0 { covariance(&out.jacobian, out.ssr)?[(0, 0)].sqrt() } else { 0.0 };
    Ok(Lifetime { tau: 1.0 / k, tau_err: k_err / (k * k) })
}
