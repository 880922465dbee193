//! Explicit RK4 and L-stable TR-BDF2 steppers for linear systems dx/dt = G x
//! with an absorbing loss functional, and the sampled evolution driver.

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::quantum::HilbertSpace;

/// Linear flow with population bookkeeping.
pub trait LinearFlow: Sync {
    fn space(&self) -> HilbertSpace;
    fn matrix(&self) -> &CsrMatrix<f64>;
    /// `(coordinate, rate)` pairs draining probability into the boundary.
    fn loss_channels(&self) -> &[(usize, f64)];
    /// Populations of the basis states.
    fn populations(&self, x: &[f64]) -> Vec<f64>;
    /// Smallest eigenvalue of the represented state.
    fn min_eigenvalue(&self, x: &[f64]) -> f64;

    fn loss_rate(&self, x: &[f64]) -> f64 {
        self.loss_channels().iter().map(|&(c, l)| l * x[c]).sum()
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Trapezoid / second-order backward-difference composite (γ = 2 − √2).
    TrBdf2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    /// Initial step (s).
    pub dt: f64,
    /// Spacing of stored samples (s).
    pub sample_interval: f64,
    pub integrator: Integrator,
    /// Compute the minimum eigenvalue at every sample.
    pub check_positivity: bool,
    /// Number of step halvings allowed before giving up.
    pub max_halvings: u32,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 1e-6,
            sample_interval: 1e-5,
            integrator: Integrator::Rk4,
            check_positivity: true,
            max_halvings: 6,
        }
    }
}

/// Monitored quantities of an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveDiagnostics {
    /// Largest |tr ρ + lost − 1| divided by the elapsed time in ms.
    pub max_trace_drift_per_ms: f64,
    /// Smallest eigenvalue seen at any sample (normalized by the trace).
    pub min_eigenvalue: f64,
    /// Step actually used (s).
    pub dt: f64,
    pub halvings: u32,
}

/// Sampled evolution of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingTrajectory {
    pub space: HilbertSpace,
    pub times: Vec<f64>,
    /// Mean occupation of the remaining population.
    pub mean_n: Vec<f64>,
    /// Populations per basis state (`space` ordering) at every sample.
    pub populations: Vec<Vec<f64>>,
    /// Remaining probability.
    pub survival: Vec<f64>,
    /// Probability absorbed by the boundary, accumulated without cancellation.
    pub lost: Vec<f64>,
    pub diagnostics: EvolveDiagnostics,
    /// Final coordinate vector.
    pub final_state: Vec<f64>,
}

impl CoolingTrajectory {
    pub fn final_mean_n(&self) -> f64 {
        *self.mean_n.last().unwrap()
    }

    pub fn final_survival(&self) -> f64 {
        *self.survival.last().unwrap()
    }
}

pub(crate) fn mean_n_of(space: HilbertSpace, populations: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &p) in populations.iter().enumerate() {
        num += space.quantum_numbers(i).1 as f64 * p;
        den += p;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

const TRBDF2_GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const TRBDF2_D: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

/// Factorized TR-BDF2 stepper for a fixed step.
pub struct TrBdf2Stepper {
    h: f64,
    lu: BandedLu,
    a: f64,
    b: f64,
}

impl TrBdf2Stepper {
    pub fn new(g: &CsrMatrix<f64>, h: f64) -> Result<Self> {
        let n = g.nrows();
        let m = CsrMatrix::identity(n).sub(&g.scale(TRBDF2_D * h));
        let lu = BandedLu::factor(&m)?;
        let gamma = TRBDF2_GAMMA;
        Ok(TrBdf2Stepper {
            h,
            lu,
            a: 1.0 / (gamma * (2.0 - gamma)),
            b: (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma)),
        })
    }

    /// Advances `x` by one step; returns the probability lost during it.
    pub fn step(&self, flow: &dyn LinearFlow, x: &mut [f64], work: &mut [f64]) -> f64 {
        let dh = TRBDF2_D * self.h;
        let loss0 = flow.loss_rate(x);
        flow.matrix().mul_vec(x, work);
        for (w, &xi) in work.iter_mut().zip(x.iter()) {
            *w = xi + dh * *w;
        }
        self.lu.solve_in_place(work);
        let loss_mid = flow.loss_rate(work);
        let d1 = dh * (loss0 + loss_mid);
        for (xi, &yi) in x.iter_mut().zip(work.iter()) {
            *xi = self.a * yi - self.b * *xi;
        }
        self.lu.solve_in_place(x);
        self.a * d1 + dh * flow.loss_rate(x)
    }
}

/// One RK4 step; returns the probability lost during it.
pub fn rk4_step(flow: &dyn LinearFlow, x: &mut [f64], h: f64, work: &mut [Vec<f64>; 3]) -> f64 {
    let g = flow.matrix();
    let n = x.len();
    let [k, acc, tmp] = work;
    let l1 = flow.loss_rate(x);
    g.mul_vec(x, k);
    for i in 0..n {
        acc[i] = k[i];
        tmp[i] = x[i] + 0.5 * h * k[i];
    }
    let l2 = flow.loss_rate(tmp);
    g.mul_vec(tmp, k);
    for i in 0..n {
        acc[i] += 2.0 * k[i];
        tmp[i] = x[i] + 0.5 * h * k[i];
    }
    let l3 = flow.loss_rate(tmp);
    g.mul_vec(tmp, k);
    for i in 0..n {
        acc[i] += 2.0 * k[i];
        tmp[i] = x[i] + h * k[i];
    }
    let l4 = flow.loss_rate(tmp);
    g.mul_vec(tmp, k);
    for i in 0..n {
        x[i] += h / 6.0 * (acc[i] + k[i]);
    }
    h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
}

/// Trace drift tolerated per simulated millisecond.
pub const TRACE_DRIFT_PER_MS: f64 = 1e-8;
/// Most negative eigenvalue tolerated.
pub const POSITIVITY_TOLERANCE: f64 = -1e-9;
/// Top-level population above which a reflecting truncation is rejected.
pub const TRUNCATION_LIMIT: f64 = 1e-3;

/// Integrates `flow` from `x0` to `t_final`, halving the step when the trace
/// or positivity monitors fail.
pub fn evolve_flow(
    flow: &dyn LinearFlow,
    x0: &[f64],
    t_final: f64,
    options: &EvolveOptions,
) -> Result<CoolingTrajectory> {
    if !(t_final > 0.0 && options.dt > 0.0 && options.sample_interval > 0.0) {
        return Err(Error::InvalidConfig("times and steps must be positive".into()));
    }
    let mut dt = options.dt;
    for halvings in 0..=options.max_halvings {
        match run_fixed(flow, x0, t_final, dt, options) {
            Ok(mut traj) => {
                traj.diagnostics.halvings = halvings;
                return Ok(traj);
            }
            Err(Attempt::Retry(_)) if halvings < options.max_halvings => dt *= 0.5,
            Err(Attempt::Retry(msg)) => return Err(Error::StepTooLarge(msg)),
            Err(Attempt::Fatal(e)) => return Err(e),
        }
    }
    unreachable!()
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}

fn run_fixed(
    flow: &dyn LinearFlow,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    options: &EvolveOptions,
) -> std::result::Result<CoolingTrajectory, Attempt> {
    let space = flow.space();
    let leaky = !flow.loss_channels().is_empty();
    // `dt` is an upper bound on the step so that halving always takes effect.
    let steps_per_sample = ((options.sample_interval / dt * (1.0 - 1e-12)).ceil() as usize).max(1);
    let n_samples = ((t_final / (steps_per_sample as f64 * dt)).ceil() as usize).max(1);
    let h = t_final / (n_samples * steps_per_sample) as f64;

    let stepper = match options.integrator {
        Integrator::TrBdf2 => Some(TrBdf2Stepper::new(flow.matrix(), h).map_err(Attempt::Fatal)?),
        Integrator::Rk4 => None,
    };
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut work1 = vec![0.0; n];
    let mut work3 = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    let pops0 = flow.populations(&x);
    let trace0: f64 = pops0.iter().sum();
    let mut lost = 0.0;
    let mut traj = CoolingTrajectory {
        space,
        times: vec![0.0],
        mean_n: vec![mean_n_of(space, &pops0)],
        populations: vec![pops0],
        survival: vec![trace0],
        lost: vec![0.0],
        diagnostics: EvolveDiagnostics {
            max_trace_drift_per_ms: 0.0,
            min_eigenvalue: f64::INFINITY,
            dt: h,
            halvings: 0,
        },
        final_state: Vec::new(),
    };
    if options.check_positivity {
        traj.diagnostics.min_eigenvalue = flow.min_eigenvalue(&x) / trace0.max(f64::MIN_POSITIVE);
    }
    for s in 1..=n_samples {
        for _ in 0..steps_per_sample {
            lost += match &stepper {
                Some(st) => st.step(flow, &mut x, &mut work1),
                None => rk4_step(flow, &mut x, h, &mut work3),
            };
        }
        let t = (s * steps_per_sample) as f64 * h;
        let pops = flow.populations(&x);
        let trace: f64 = pops.iter().sum();
        if !trace.is_finite() {
            return Err(Attempt::Retry(format!("non-finite state at t = {t:e} s")));
        }
        let drift = ((trace + lost) - trace0).abs() / (t * 1e3);
        traj.diagnostics.max_trace_drift_per_ms = traj.diagnostics.max_trace_drift_per_ms.max(drift);
        if drift > TRACE_DRIFT_PER_MS {
            return Err(Attempt::Retry(format!("trace drift {drift:.3e} per ms at t = {t:e} s")));
        }
        if options.check_positivity {
            let ev = flow.min_eigenvalue(&x) / trace.max(f64::MIN_POSITIVE);
            traj.diagnostics.min_eigenvalue = traj.diagnostics.min_eigenvalue.min(ev);
            if ev < POSITIVITY_TOLERANCE {
                return Err(Attempt::Retry(format!("eigenvalue {ev:.3e} at t = {t:e} s")));
            }
        }
        if !leaky {
            let top: f64 = space.m_values().map(|m| pops[space.index(m, space.n_max)]).sum();
            if top > TRUNCATION_LIMIT {
                return Err(Attempt::Fatal(Error::TruncationOverflow { population: top }));
            }
        }
        traj.times.push(t);
        traj.mean_n.push(mean_n_of(space, &pops));
        traj.populations.push(pops);
        traj.survival.push(trace0 - lost);
        traj.lost.push(lost);
    }
    traj.final_state = x;
    Ok(traj)
}
