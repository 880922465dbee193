//! Offset-field scans of survival and occupation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::DensityState;
use crate::trap::{Axis, FieldConfig, LaserConfig, TrapConfig};

use super::integrate::{EvolveOptions, Integrator};
use super::lindblad::lindblad_evolve;
use super::model::{AxisModel, Boundary, DissipatorSet, ModelOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Interaction time per field value (s).
    pub duration: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Thermal occupation of the initial state, prepared in m_F = −F.
    pub initial_mean_n: f64,
    /// Axes that are simulated.
    pub axes: Vec<Axis>,
    /// Axes whose survival multiplies into the reported survival.
    pub survival_axes: Vec<Axis>,
    pub model: ModelOptions,
    /// Stored samples per trajectory.
    pub samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            duration: 0.5,
            dt: 1e-3,
            initial_mean_n: 1.0,
            axes: Axis::ALL.to_vec(),
            survival_axes: vec![Axis::Y],
            model: ModelOptions::default(),
            samples: 50,
        }
    }
}

/// Result at one offset field. Entries for axes that were not simulated are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub b_off: f64,
    /// Product of the survival of the selected axes.
    pub survival: f64,
    /// 1 − survival, computed without cancellation.
    pub lost: f64,
    pub lost_axis: [f64; 3],
    /// Occupation of the surviving population at the end of the run.
    pub mean_n: [f64; 3],
    /// Effective lifetime −duration / ln(survival) (s); infinite without loss.
    pub tau: f64,
}

struct AxisOutcome {
    lost: f64,
    mean_n: f64,
}

fn run_axis(
    trap: &TrapConfig,
    field: &FieldConfig,
    laser: &LaserConfig,
    dissipators: &DissipatorSet,
    axis: Axis,
    options: &ScanOptions,
) -> Result<AxisOutcome> {
    let model = AxisModel::new(trap, field, laser, dissipators, axis, &options.model)?;
    let system = model.open_system(Boundary::Absorbing);
    let rho0 = DensityState::thermal(model.space, -(field.f_total as i32), options.initial_mean_n);
    let evolve = EvolveOptions {
        dt: options.dt,
        sample_interval: options.duration / options.samples.max(1) as f64,
        integrator: Integrator::TrBdf2,
        check_positivity: true,
        max_halvings: 4,
    };
    let traj = lindblad_evolve(&system, &rho0, options.duration, &evolve)?;
    Ok(AxisOutcome { lost: *traj.lost.last().unwrap(), mean_n: traj.final_mean_n() })
}

/// Runs the per-axis dynamics with an absorbing boundary at every offset field.
///
/// Output order follows `fields` regardless of scheduling.
pub fn scan_offset_field(
    trap: &TrapConfig,
    field: &FieldConfig,
    laser: &LaserConfig,
    dissipators: &DissipatorSet,
    fields: &[f64],
    options: &ScanOptions,
) -> Result<Vec<ScanPoint>> {
    if fields.len() < 2 {
        return Err(Error::InvalidConfig(format!("a scan needs at least 2 field values, got {}", fields.len())));
    }
    if let Some(a) = options.survival_axes.iter().find(|a| !options.axes.contains(a)) {
        return Err(Error::InvalidConfig(format!("survival axis {a} is not simulated")));
    }
    let tasks: Vec<(usize, Axis)> =
        (0..fields.len()).flat_map(|i| options.axes.iter().map(move |&a| (i, a))).collect();
    let outcomes: Vec<Result<AxisOutcome>> = tasks
        .par_iter()
        .map(|&(i, axis)| {
            let f = field.with_offset(fields[i]);
            f.validate()?;
            run_axis(trap, &f, laser, dissipators, axis, options)
        })
        .collect();
    let mut points: Vec<ScanPoint> = fields
        .iter()
        .map(|&b| ScanPoint {
            b_off: b,
            survival: 1.0,
            lost: 0.0,
            lost_axis: [f64::NAN; 3],
            mean_n: [f64::NAN; 3],
            tau: f64::INFINITY,
        })
        .collect();
    for (&(i, axis), out) in tasks.iter().zip(outcomes) {
        let out = out?;
        points[i].lost_axis[axis.index()] = out.lost;
        points[i].mean_n[axis.index()] = out.mean_n;
    }
    for p in &mut points {
        let log_surv: f64 = options.survival_axes.iter().map(|a| (-p.lost_axis[a.index()]).ln_1p()).sum();
        p.lost = -log_surv.exp_m1();
        p.survival = log_surv.exp();
        p.tau = if log_surv < 0.0 { -options.duration / log_surv } else { f64::INFINITY };
    }
    Ok(points)
}

/// Observable a resonance was located on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceSource {
    /// Minimum of the lost probability (maximum of survival).
    Survival,
    /// Minimum of the y occupation, used when the loss shows no structure.
    MeanNy,
}

impl std::fmt::Display for ResonanceSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResonanceSource::Survival => write!(f, "survival"),
            ResonanceSource::MeanNy => write!(f, "mean_n_y"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Interpolated field (G).
    pub b_off: f64,
    /// Depth of the dip in natural-log units.
    pub prominence: f64,
    pub source: ResonanceSource,
}

/// Minimum ln-prominence of an accepted dip.
const MIN_PROMINENCE: f64 = 0.05;

/// Vertex of the parabola through three points, clamped to the outer two.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if !(curv > 0.0) {
        return x[1];
    }
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    v.clamp(x[0], x[2])
}

fn dips(x: &[f64], q: &[f64], source: ResonanceSource) -> Vec<Resonance> {
    let n = q.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(q[i] < q[i - 1] && q[i] <= q[i + 1]) {
            continue;
        }
        let mut left = q[i];
        for j in (0..i).rev() {
            if q[j] < q[i] {
                break;
            }
            left = left.max(q[j]);
        }
        let mut right = q[i];
        for &qj in &q[i + 1..] {
            if qj < q[i] {
                break;
            }
            right = right.max(qj);
        }
        let prominence = left.min(right) - q[i];
        if prominence >= MIN_PROMINENCE {
            out.push(Resonance {
                b_off: parabola_vertex([x[i - 1], x[i], x[i + 1]], [q[i - 1], q[i], q[i + 1]]),
                prominence,
                source,
            });
        }
    }
    out
}

/// Locates survival maxima by their loss dips, in increasing field order.
///
/// The loss is compared on a log scale. When it has no dip (for instance
/// without heating) the minima of ⟨n_y⟩ are returned instead.
pub fn find_resonances(points: &[ScanPoint]) -> Vec<Resonance> {
    let x: Vec<f64> = points.iter().map(|p| p.b_off).collect();
    if points.iter().all(|p| p.lost > 0.0) {
        let q: Vec<f64> = points.iter().map(|p| p.lost.ln()).collect();
        let found = dips(&x, &q, ResonanceSource::Survival);
        if !found.is_empty() {
            return found;
        }
    }
    let ny: Vec<f64> = points.iter().map(|p| p.mean_n[Axis::Y.index()]).collect();
    if ny.iter().all(|v| *v > 0.0 && v.is_finite()) {
        let q: Vec<f64> = ny.iter().map(|v| v.ln()).collect();
        return dips(&x, &q, ResonanceSource::MeanNy);
    }
    Vec::new()
}
