use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Uniform frequency grid `start + k·step`, k = 0..len.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite()) || len < 2 {
            return Err(Error::InvalidConfig(format!("bad frequency grid start={start} step={step} len={len}")));
        }
        Ok(FrequencyGrid { start, step, len })
    }

    /// Grid from −half_span to +half_span inclusive.
    pub fn symmetric(half_span: f64, step: f64) -> Result<Self> {
        let k = (half_span / step).round() as usize;
        Self::new(-(k as f64) * step, step, 2 * k + 1)
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.frequency(k)).collect()
    }

    pub fn end(&self) -> f64 {
        self.frequency(self.len - 1)
    }
}

/// Power spectral density on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub psd: Vec<f64>,
    /// Resolution bandwidth (Hz); zero for model spectra.
    pub resolution_bandwidth: f64,
    /// Number of averaged periodograms; zero for model spectra.
    pub averages: usize,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, psd: Vec<f64>) -> Result<Self> {
        if psd.len() != grid.len {
            return Err(Error::DimensionMismatch { expected: grid.len, found: psd.len() });
        }
        if let Some(v) = psd.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("psd values must be finite and >= 0, found {v}")));
        }
        Ok(Spectrum { grid, psd, resolution_bandwidth: 0.0, averages: 0 })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.frequencies()
    }

    /// CSV text with a commented header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# resolution_bandwidth_hz = {}", self.resolution_bandwidth);
        let _ = writeln!(s, "# averages = {}", self.averages);
        let _ = writeln!(s, "# freq_hz [Hz], psd [arb]");
        let _ = writeln!(s, "freq_hz,psd");
        for (k, p) in self.psd.iter().enumerate() {
            let _ = writeln!(s, "{},{}", self.grid.frequency(k), p);
        }
        s
    }

    /// Parses the CSV written by [`Spectrum::to_csv`]; the grid must be uniform.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut freqs = Vec::new();
        let mut psd = Vec::new();
        let mut rbw = 0.0;
        let mut averages = 0;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(c) = t.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    match k.trim() {
                        "resolution_bandwidth_hz" => rbw = v.trim().parse().unwrap_or(0.0),
                        "averages" => averages = v.trim().parse().unwrap_or(0),
                        _ => {}
                    }
                }
                continue;
            }
            let mut it = t.split(',');
            let (Some(a), Some(b)) = (it.next(), it.next()) else {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            };
            let (Ok(f), Ok(p)) = (a.trim().parse::<f64>(), b.trim().parse::<f64>()) else {
                if freqs.is_empty() && psd.is_empty() {
                    continue; // column names
                }
                return Err(Error::Parse(format!("line {}: not a number", lineno + 1)));
            };
            freqs.push(f);
            psd.push(p);
        }
        if freqs.len() < 2 {
            return Err(Error::Parse("spectrum needs at least two rows".into()));
        }
        let step = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
        for (k, &f) in freqs.iter().enumerate() {
            if (f - (freqs[0] + k as f64 * step)).abs() > 1e-6 * step.abs() + 1e-9 {
                return Err(Error::Parse(format!("frequency grid is not uniform at row {k}")));
            }
        }
        let grid = FrequencyGrid::new(freqs[0], step, freqs.len())?;
        let mut s = Spectrum::new(grid, psd)?;
        s.resolution_bandwidth = rbw;
        s.averages = averages;
        Ok(s)
    }

    /// Restriction to `[lo, hi]`.
    pub fn crop(&self, lo: f64, hi: f64) -> Result<Self> {
        let k0 = ((lo - self.grid.start) / self.grid.step).ceil().max(0.0) as usize;
        let k1 = (((hi - self.grid.start) / self.grid.step).floor() as isize).min(self.grid.len as isize - 1);
        if k1 < k0 as isize + 1 {
            return Err(Error::InvalidConfig(format!("crop [{lo}, {hi}] leaves fewer than two samples")));
        }
        let k1 = k1 as usize;
        let grid = FrequencyGrid::new(self.grid.frequency(k0), self.grid.step, k1 - k0 + 1)?;
        Ok(Spectrum {
            grid,
            psd: self.psd[k0..=k1].to_vec(),
            resolution_bandwidth: self.resolution_bandwidth,
            averages: self.averages,
        })
    }
}
