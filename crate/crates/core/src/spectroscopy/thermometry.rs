use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

use super::spectrum::Spectrum;

/// P₀ = 1 / (1 + n̄) for a thermal state.
pub fn ground_state_occupation(mean_n: f64) -> f64 {
    1.0 / (1.0 + mean_n)
}

/// Occupation inferred from the red and blue sideband strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermometry {
    pub mean_n: f64,
    /// First-order propagated one-sigma error.
    pub mean_n_err: f64,
    pub ground_state: f64,
}

/// n̄ = S⁻ / (S⁺ − S⁻), with errors of S⁻ and S⁺ propagated to first order.
pub fn sideband_thermometry(s_minus: f64, s_plus: f64, s_minus_err: f64, s_plus_err: f64) -> Result<Thermometry> {
    if !(s_minus >= 0.0) || !(s_plus > s_minus) || !s_plus.is_finite() {
        return Err(Error::NonPhysicalSidebands { s_minus, s_plus });
    }
    let d = s_plus - s_minus;
    let mean_n = s_minus / d;
    let dm = s_plus / (d * d);
    let dp = s_minus / (d * d);
    let mean_n_err = ((dm * s_minus_err).powi(2) + (dp * s_plus_err).powi(2)).sqrt();
    Ok(Thermometry { mean_n, mean_n_err, ground_state: ground_state_occupation(mean_n) })
}

/// Frequency window `center ± half_width` (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub center: f64,
    pub half_width: f64,
}

impl Band {
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }
    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }
    pub fn overlaps(&self, other: &Band) -> bool {
        self.lo() < other.hi() && other.lo() < self.hi()
    }
}

fn interp(s: &Spectrum, f: f64) -> f64 {
    let x = ((f - s.grid.start) / s.grid.step).clamp(0.0, (s.grid.len - 1) as f64);
    let k = (x.floor() as usize).min(s.grid.len - 2);
    let t = x - k as f64;
    s.psd[k] * (1.0 - t) + s.psd[k + 1] * t
}

/// Trapezoidal integral of the PSD over `[lo, hi]`, interpolating at the ends.
pub fn integrate_band(s: &Spectrum, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) || lo < s.grid.start || hi > s.grid.end() {
        return Err(Error::InvalidConfig(format!(
            "band [{lo}, {hi}] not inside the grid [{}, {}]",
            s.grid.start,
            s.grid.end()
        )));
    }
    let h = s.grid.step;
    let k0 = ((lo - s.grid.start) / h).ceil() as usize;
    let k1 = ((hi - s.grid.start) / h).floor() as usize;
    if k1 < k0 {
        return Ok(0.5 * (interp(s, lo) + interp(s, hi)) * (hi - lo));
    }
    let (f0, f1) = (s.grid.frequency(k0), s.grid.frequency(k1));
    let mut total = 0.5 * (interp(s, lo) + s.psd[k0]) * (f0 - lo) + 0.5 * (s.psd[k1] + interp(s, hi)) * (hi - f1);
    for k in k0..k1 {
        total += 0.5 * (s.psd[k] + s.psd[k + 1]) * h;
    }
    Ok(total)
}

/// Background-subtracted sideband strengths of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandIntegrals {
    pub s_minus: f64,
    pub s_plus: f64,
    /// One-sigma error of the subtracted baseline.
    pub s_minus_err: f64,
    pub s_plus_err: f64,
}

/// Integral of a quadratic baseline fitted by least squares to the PSD in
/// the guard windows `[lo − guard, lo)` and `(hi, hi + guard]`, with its
/// standard error from the fit residuals.
fn baseline_integral(s: &Spectrum, band: Band, guard: f64) -> Result<(f64, f64)> {
    let (c, w) = (band.center, band.half_width);
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    let mut samples = Vec::new();
    for (k, f) in s.frequencies().into_iter().enumerate() {
        let inside_guard = (f >= band.lo() - guard && f < band.lo()) || (f > band.hi() && f <= band.hi() + guard);
        if inside_guard {
            let x = (f - c) / w;
            let row = Vector3::new(1.0, x, x * x);
            xtx += row * row.transpose();
            xty += row * s.psd[k];
            samples.push((row, s.psd[k]));
        }
    }
    if samples.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "guard windows of {guard} Hz around {c} Hz hold {} grid points; at least 4 are needed",
            samples.len()
        )));
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::InvalidConfig("guard windows do not constrain a quadratic baseline".into()))?;
    let beta = inv * xty;
    // ∫ over the band of a + b x + c x² with x = (f − center)/w.
    let g = Vector3::new(2.0 * w, 0.0, 2.0 * w / 3.0);
    let ssr: f64 = samples.iter().map(|(row, y)| (y - row.dot(&beta)).powi(2)).sum();
    let sigma2 = ssr / (samples.len() - 3) as f64;
    let var = sigma2 * (g.transpose() * inv * g)[(0, 0)];
    Ok((g.dot(&beta), var.max(0.0).sqrt()))
}

/// Integrates the bands at ∓`frequency` and removes a quadratic baseline
/// fitted in guard windows of width `guard` on either side; `guard = 0`
/// returns the raw integrals with zero error.
pub fn sideband_integrals(s: &Spectrum, frequency: f64, half_width: f64, guard: f64) -> Result<SidebandIntegrals> {
    let one = |center: f64| -> Result<(f64, f64)> {
        let band = Band { center, half_width };
        let raw = integrate_band(s, band.lo(), band.hi())?;
        if guard <= 0.0 {
            return Ok((raw, 0.0));
        }
        if band.lo() - guard < s.grid.start || band.hi() + guard > s.grid.end() {
            return Err(Error::InvalidConfig(format!("guard windows around {center} Hz leave the grid")));
        }
        let (base, err) = baseline_integral(s, band, guard)?;
        Ok((raw - base, err))
    };
    let (s_minus, em) = one(-frequency)?;
    let (s_plus, ep) = one(frequency)?;
    Ok(SidebandIntegrals { s_minus, s_plus, s_minus_err: em, s_plus_err: ep })
}
