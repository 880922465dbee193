//! Rate-modulated photon click streams.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::spectroscopy::LineModel;

/// One intensity-modulation tone of the beat note.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    /// Offset from the carrier (Hz).
    pub frequency: f64,
    /// Modulation depth m.
    pub depth: f64,
    /// Lorentzian FWHM produced by phase diffusion (Hz).
    pub linewidth: f64,
}

/// Set of tones modulating the click rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationModel {
    pub tones: Vec<Tone>,
}

impl ModulationModel {
    pub fn new(tones: Vec<Tone>) -> Result<Self> {
        for t in &tones {
            if !(t.depth >= 0.0 && t.linewidth >= 0.0 && t.frequency.is_finite()) {
                return Err(Error::InvalidConfig(format!("invalid tone {t:?}")));
            }
        }
        let m = ModulationModel { tones };
        let total = m.total_depth();
        if total > 1.0 {
            return Err(Error::ModulationOverflow { total });
        }
        Ok(m)
    }

    /// Unmodulated stream.
    pub fn flat() -> Self {
        ModulationModel { tones: Vec::new() }
    }

    /// Tones whose powers m² are proportional to the component weights of
    /// `model`, scaled so the depths sum to `total_depth`.
    ///
    /// Components with identical center and width are merged into one tone
    /// of the summed power. Components carrying less than `min_weight` of the
    /// total rate are dropped.
    pub fn from_line_model(model: &LineModel, total_depth: f64, min_weight: f64) -> Result<Self> {
        if total_depth > 1.0 {
            return Err(Error::ModulationOverflow { total: total_depth });
        }
        if !(total_depth >= 0.0) {
            return Err(Error::InvalidConfig(format!("modulation depth must be >= 0, got {total_depth}")));
        }
        let comps = model.components();
        let total: f64 = comps.iter().map(|c| c.rate).sum();
        let mut merged: Vec<(f64, f64, f64)> = Vec::new();
        for c in comps {
            let w = c.rate / total;
            if w < min_weight {
                continue;
            }
            match merged.iter_mut().find(|(f, lw, _)| *f == c.center_frequency && *lw == c.width) {
                Some(entry) => entry.2 += w,
                None => merged.push((c.center_frequency, c.width, w)),
            }
        }
        let norm: f64 = merged.iter().map(|m| m.2.sqrt()).sum();
        let tones = merged
            .into_iter()
            .map(|(frequency, linewidth, w)| Tone { frequency, linewidth, depth: total_depth * w.sqrt() / norm })
            .collect();
        ModulationModel::new(tones)
    }

    pub fn total_depth(&self) -> f64 {
        self.tones.iter().map(|t| t.depth).sum()
    }

    /// Largest |offset| plus ten linewidths (Hz).
    pub fn spectral_extent(&self) -> f64 {
        self.tones.iter().map(|t| t.frequency.abs() + 10.0 * t.linewidth).fold(0.0, f64::max)
    }
}

/// Photon arrival times of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStream {
    /// Record length (s).
    pub duration: f64,
    /// Strictly increasing arrival times in [0, duration) (s).
    pub timestamps: Vec<f64>,
    pub seed: u64,
}

const MAGIC: &[u8; 8] = b"DRCCLK01";

impl ClickStream {
    /// Binary layout, all little-endian: magic `DRCCLK01`, duration (f64),
    /// seed (u64), count (u64), then `count` timestamps (f64 seconds).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.duration.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.timestamps.len() as u64).to_le_bytes())?;
        for t in &self.timestamps {
            w.write_all(&t.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        if &buf != MAGIC {
            return Err(Error::Parse("missing DRCCLK01 header".into()));
        }
        r.read_exact(&mut buf)?;
        let duration = f64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let seed = u64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let count = u64::from_le_bytes(buf) as usize;
        let mut timestamps = Vec::with_capacity(count.min(1 << 28));
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            timestamps.push(f64::from_le_bytes(buf));
        }
        Ok(ClickStream { duration, timestamps, seed })
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# duration_s = {}\n# seed = {}\n# t_s [s]\nt_s\n", self.duration, self.seed);
        for t in &self.timestamps {
            s.push_str(&format!("{t}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut duration = None;
        let mut seed = 0;
        let mut timestamps = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    match k.trim() {
                        "duration_s" => duration = v.trim().parse().ok(),
                        "seed" => seed = v.trim().parse().unwrap_or(0),
                        _ => {}
                    }
                }
                continue;
            }
            if line == "t_s" {
                continue;
            }
            timestamps.push(line.parse::<f64>().map_err(|e| Error::Parse(format!("{line}: {e}")))?);
        }
        let duration = duration.ok_or_else(|| Error::Parse("missing duration_s header".into()))?;
        Ok(ClickStream { duration, timestamps, seed })
    }
}

/// Interval on which the tone phases take their diffusion steps (s). Line
/// shapes are exact Lorentzians well inside 1/(2π·interval) of each tone.
pub const PHASE_STEP: f64 = 0.5e-6;

/// Draws an inhomogeneous Poisson process with rate
/// λ(t) = R (1 + Σ m_k cos(2π (f_c + f_k) t + φ_k(t))) by thinning.
///
/// Each φ_k starts uniformly random and diffuses in steps of
/// [`PHASE_STEP`] so that tone k acquires a Lorentzian line of its
/// configured width. Tones sharing a frequency are summed as one phasor.
pub fn simulate_click_stream(
    model: &ModulationModel,
    mean_rate: f64,
    carrier_offset: f64,
    duration: f64,
    seed: u64,
) -> Result<ClickStream> {
    if !(mean_rate > 0.0 && duration > 0.0) {
        return Err(Error::InvalidConfig("mean rate and duration must be > 0".into()));
    }
    if mean_rate * duration < 100.0 {
        return Err(Error::InvalidConfig(format!(
            "only {:.1} clicks expected; at least 100 are required",
            mean_rate * duration
        )));
    }
    let total = model.total_depth();
    if total > 1.0 {
        return Err(Error::ModulationOverflow { total });
    }
    if !model.tones.is_empty() && !(carrier_offset > model.spectral_extent()) {
        return Err(Error::InvalidConfig(format!(
            "carrier offset {carrier_offset} Hz does not exceed the spectral extent {:.0} Hz",
            model.spectral_extent()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let lambda_max = mean_rate * (1.0 + total);
    let gaps = Exp::new(lambda_max).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut groups: Vec<f64> = Vec::new();
    let mut group_of = Vec::with_capacity(model.tones.len());
    for t in &model.tones {
        let f = carrier_offset + t.frequency;
        let g = match groups.iter().position(|&x| x == f) {
            Some(g) => g,
            None => {
                groups.push(f);
                groups.len() - 1
            }
        };
        group_of.push(g);
    }
    let kicks: Vec<f64> = model.tones.iter().map(|t| (2.0 * PI * t.linewidth * PHASE_STEP).sqrt()).collect();
    let mut phases: Vec<f64> = model.tones.iter().map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let mut phasors = vec![(0.0, 0.0); groups.len()];
    let refresh = |phases: &[f64], phasors: &mut [(f64, f64)]| {
        phasors.iter_mut().for_each(|p| *p = (0.0, 0.0));
        for (k, t) in model.tones.iter().enumerate() {
            let (s, c) = phases[k].sin_cos();
            let p = &mut phasors[group_of[k]];
            p.0 += t.depth * c;
            p.1 += t.depth * s;
        }
    };
    refresh(&phases, &mut phasors);

    let mut out = Vec::with_capacity((mean_rate * duration * 1.1) as usize + 16);
    let mut t = 0.0;
    let mut next_kick = PHASE_STEP;
    loop {
        t += gaps.sample(&mut rng);
        if t >= duration {
            break;
        }
        if t >= next_kick {
            while t >= next_kick {
                for k in 0..phases.len() {
                    if kicks[k] > 0.0 {
                        let z: f64 = rng.sample(StandardNormal);
                        phases[k] += kicks[k] * z;
                    }
                }
                next_kick += PHASE_STEP;
            }
            refresh(&phases, &mut phasors);
        }
        let mut modulation = 0.0;
        for (g, &f) in groups.iter().enumerate() {
            let (s, c) = (2.0 * PI * (f * t).fract()).sin_cos();
            modulation += phasors[g].0 * c - phasors[g].1 * s;
        }
        let accept = (1.0 + modulation) / (1.0 + total);
        if rng.random::<f64>() < accept {
            if out.last().is_some_and(|&last| t <= last) {
                continue;
            }
            out.push(t);
        }
    }
    Ok(ClickStream { duration, timestamps: out, seed })
}
