//! Welch power spectral density estimation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::spectroscopy::{FrequencyGrid, Spectrum};

use super::clicks::ClickStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchOptions {
    /// Segment length (s).
    pub window_length: f64,
    /// Fraction of a segment shared with the next one.
    pub overlap: f64,
    /// Width of the counting bins (s).
    pub bin_width: f64,
}

impl Default for WelchOptions {
    fn default() -> Self {
        WelchOptions { window_length: 1e-3, overlap: 0.5, bin_width: 20e-9 }
    }
}

/// Averaged one-sided periodogram.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Frequencies from 0 to the Nyquist frequency; `averages` counts segments.
    pub spectrum: Spectrum,
    pub window_length: f64,
    pub overlap: f64,
    pub segments: usize,
    pub realizations: usize,
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len).map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / len as f64).cos()).collect()
}

/// Welch estimate of a uniformly sampled signal: Hann segments of
/// `segment_len` samples advanced by `segment_len − overlap_len`, mean
/// removed per segment, one-sided density scaling. Returns the PSD on
/// k·fs/L, k = 0..=L/2, and the number of segments.
pub fn welch_signal(x: &[f64], sample_rate: f64, segment_len: usize, overlap_len: usize) -> Result<(Vec<f64>, usize)> {
    if segment_len < 4 || overlap_len >= segment_len {
        return Err(Error::InvalidConfig(format!("bad segmentation {segment_len}/{overlap_len}")));
    }
    if x.len() < segment_len {
        return Err(Error::WindowTooLong {
            duration: x.len() as f64 / sample_rate,
            window: segment_len as f64 / sample_rate,
        });
    }
    let step = segment_len - overlap_len;
    let n_seg = (x.len() - segment_len) / step + 1;
    let w = hann(segment_len);
    let w2: f64 = w.iter().map(|v| v * v).sum();
    let n_out = segment_len / 2 + 1;
    let mut acc = vec![0.0; n_out];
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let windowed = |s: usize| -> Vec<f64> {
        let seg = &x[s * step..s * step + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        seg.iter().zip(&w).map(|(v, wj)| (v - mean) * wj).collect()
    };
    // Two real segments per complex transform.
    let mut s = 0;
    while s < n_seg {
        let a = windowed(s);
        let b = if s + 1 < n_seg { Some(windowed(s + 1)) } else { None };
        for j in 0..segment_len {
            buf[j] = Complex64::new(a[j], b.as_ref().map_or(0.0, |b| b[j]));
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (k, slot) in acc.iter_mut().enumerate() {
            let z = buf[k];
            let zc = buf[(segment_len - k) % segment_len].conj();
            let xa = 0.5 * (z + zc);
            *slot += xa.norm_sqr();
            if b.is_some() {
                let xb = (z - zc) * Complex64::new(0.0, -0.5);
                *slot += xb.norm_sqr();
            }
        }
        s += 2;
    }
    let scale = 1.0 / (sample_rate * w2 * n_seg as f64);
    for (k, v) in acc.iter_mut().enumerate() {
        let one_sided = if k == 0 || (segment_len % 2 == 0 && k == segment_len / 2) { 1.0 } else { 2.0 };
        *v *= scale * one_sided;
    }
    Ok((acc, n_seg))
}

/// Counts per bin of width `bin_width` over the record.
pub fn bin_counts(stream: &ClickStream, bin_width: f64) -> Vec<f64> {
    let n = (stream.duration / bin_width).floor() as usize;
    let mut counts = vec![0.0; n];
    for &t in &stream.timestamps {
        let k = (t / bin_width) as usize;
        if k < n {
            counts[k] += 1.0;
        }
    }
    counts
}

/// Welch PSD of the binned click signal (counts²/Hz).
pub fn welch_psd(stream: &ClickStream, options: &WelchOptions) -> Result<PsdEstimate> {
    let WelchOptions { window_length, overlap, bin_width } = *options;
    if !(bin_width > 0.0 && window_length > bin_width && (0.0..1.0).contains(&overlap)) {
        return Err(Error::InvalidConfig(format!("bad Welch options {options:?}")));
    }
    if stream.duration < 2.0 * window_length {
        return Err(Error::WindowTooLong { duration: stream.duration, window: window_length });
    }
    let counts = bin_counts(stream, bin_width);
    let seg = (window_length / bin_width).round() as usize;
    let ov = (overlap * seg as f64).round() as usize;
    let fs = 1.0 / bin_width;
    let (psd, segments) = welch_signal(&counts, fs, seg, ov)?;
    let grid = FrequencyGrid::new(0.0, fs / seg as f64, psd.len())?;
    let mut spectrum = Spectrum::new(grid, psd)?;
    spectrum.resolution_bandwidth = fs / seg as f64;
    spectrum.averages = segments;
    Ok(PsdEstimate { spectrum, window_length, overlap, segments, realizations: 1 })
}

/// Pointwise mean of estimates on identical grids, summed in the given order.
pub fn average_psds(estimates: &[PsdEstimate]) -> Result<PsdEstimate> {
    let first = estimates.first().ok_or_else(|| Error::InvalidConfig("nothing to average".into()))?;
    let n = first.spectrum.psd.len();
    let mut acc = vec![0.0; n];
    let mut segments = 0;
    let mut realizations = 0;
    for e in estimates {
        if e.spectrum.grid != first.spectrum.grid {
            return Err(Error::GridMismatch);
        }
        for (a, v) in acc.iter_mut().zip(&e.spectrum.psd) {
            *a += v;
        }
        segments += e.segments;
        realizations += e.realizations;
    }
    let inv = 1.0 / estimates.len() as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    let mut spectrum = Spectrum::new(first.spectrum.grid, acc)?;
    spectrum.resolution_bandwidth = first.spectrum.resolution_bandwidth;
    spectrum.averages = segments;
    Ok(PsdEstimate { spectrum, window_length: first.window_length, overlap: first.overlap, segments, realizations })
}

/// Σ psd·Δf over `[lo, hi]`.
pub fn band_power(spectrum: &Spectrum, lo: f64, hi: f64) -> f64 {
    let g = &spectrum.grid;
    (0..g.len).filter(|&k| (lo..=hi).contains(&g.frequency(k))).map(|k| spectrum.psd[k] * g.step).sum()
}
