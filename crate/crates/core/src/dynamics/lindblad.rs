//! Lindblad evolution and steady states.

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::quantum::{DensityState, HilbertSpace};

use super::generator::LiouvilleGenerator;
use super::integrate::{evolve_flow, CoolingTrajectory, EvolveOptions, Integrator, LinearFlow};
use super::model::OpenSystem;

impl LinearFlow for LiouvilleGenerator {
    fn space(&self) -> HilbertSpace {
        LiouvilleGenerator::space(self)
    }
    fn matrix(&self) -> &CsrMatrix<f64> {
        LiouvilleGenerator::matrix(self)
    }
    fn loss_channels(&self) -> &[(usize, f64)] {
        LiouvilleGenerator::loss_channels(self)
    }
    fn populations(&self, x: &[f64]) -> Vec<f64> {
        LiouvilleGenerator::populations(self, x)
    }
    fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        LiouvilleGenerator::min_eigenvalue(self, x)
    }
}

/// Integrates the master equation from `rho0` to `t_final`.
///
/// The initial top-level population must be below 1e-4.
pub fn lindblad_evolve(
    system: &OpenSystem,
    rho0: &DensityState,
    t_final: f64,
    options: &EvolveOptions,
) -> Result<CoolingTrajectory> {
    let s = system.space;
    let top: f64 = s.m_values().map(|m| rho0.population(m, s.n_max)).sum();
    if top >= 1e-4 {
        return Err(Error::InvalidConfig(format!(
            "initial population {top:.3e} at the top Fock level is not below 1e-4"
        )));
    }
    let generator = LiouvilleGenerator::new(system, Some(rho0))?;
    let x0 = generator.pack(rho0)?;
    evolve_flow(&generator, &x0, t_final, options)
}

/// Density matrix at the end of a trajectory produced by [`lindblad_evolve`].
pub fn final_density(system: &OpenSystem, rho0: &DensityState, trajectory: &CoolingTrajectory) -> Result<DensityState> {
    let generator = LiouvilleGenerator::new(system, Some(rho0))?;
    Ok(generator.unpack(&trajectory.final_state))
}

/// How a steady state was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyStateMethod {
    NullSpace,
    LongTimeIntegration,
}

impl std::fmt::Display for SteadyStateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SteadyStateMethod::NullSpace => write!(f, "null-space"),
            SteadyStateMethod::LongTimeIntegration => write!(f, "long-time-integration"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateOptions {
    /// Starting point for the integration fallback; its coherences are
    /// also included in the generator.
    pub initial: Option<DensityState>,
    /// Basis state pinned to remove the trace degeneracy; by default the
    /// state with the smallest escape rate.
    pub reference_state: Option<usize>,
    /// Fallback integration length (s) and step (s).
    pub integration_time: f64,
    pub integration_dt: f64,
    /// Relative tolerance on ‖G x‖ for accepting a solution.
    pub residual_tolerance: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            initial: None,
            reference_state: None,
            integration_time: 2.0,
            integration_dt: 1e-4,
            residual_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: DensityState,
    pub method: SteadyStateMethod,
    /// ‖G x‖∞ / (‖G‖max ‖x‖∞) at the returned state.
    pub residual: f64,
}

impl SteadyState {
    pub fn mean_n(&self) -> f64 {
        self.state.mean_n()
    }
}

/// Pivot ratio below which the pinned system is treated as rank deficient.
const SINGULAR_PIVOT: f64 = 1e-12;

/// Solves L[ρ] = 0 with tr ρ = 1.
///
/// A system with an absorbing boundary has no normalizable steady state;
/// its reflecting counterpart is solved instead and rejected with
/// [`Error::HeatingDivergence`] when more than 1e-3 of the population sits
/// at the boundary level.
pub fn steady_state(system: &OpenSystem, options: &SteadyStateOptions) -> Result<SteadyState> {
    let reflecting = system.reflecting();
    let result = steady_state_reflecting(&reflecting, options)?;
    if system.is_leaky() {
        let s = system.space;
        let top: f64 = s.m_values().map(|m| result.state.population(m, s.n_max)).sum();
        if top > 1e-3 {
            return Err(Error::HeatingDivergence { top_population: top });
        }
    }
    Ok(result)
}

fn default_reference(system: &OpenSystem) -> usize {
    let dim = system.space.dim();
    let mut escape = system.boundary_loss.clone();
    for l in &system.jumps {
        for (i, j, v) in l.matrix.triplets() {
            if i != j {
                escape[j] += v.norm_sqr();
            }
        }
    }
    (0..dim).min_by(|&a, &b| escape[a].total_cmp(&escape[b]).then(a.cmp(&b))).unwrap_or(0)
}

fn relative_residual(g: &CsrMatrix<f64>, x: &[f64]) -> f64 {
    let mut r = vec![0.0; x.len()];
    g.mul_vec(x, &mut r);
    let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    rn / (g.max_abs() * xn).max(f64::MIN_POSITIVE)
}

fn steady_state_reflecting(system: &OpenSystem, options: &SteadyStateOptions) -> Result<SteadyState> {
    let generator = LiouvilleGenerator::new(system, options.initial.as_ref())?;
    let g = generator.matrix();
    let reference = options.reference_state.unwrap_or_else(|| default_reference(system));
    if reference >= system.space.dim() {
        return Err(Error::InvalidConfig(format!("reference state {reference} outside the basis")));
    }
    let r = generator.population_coord(reference);
    let n = generator.len();
    let mut triplets: Vec<(usize, usize, f64)> = g.triplets().filter(|&(i, _, _)| i != r).collect();
    triplets.push((r, r, g.max_abs().max(1.0)));
    let pinned = CsrMatrix::from_triplets(n, n, triplets);
    let lu = BandedLu::factor(&pinned)?;
    if !lu.is_singular(SINGULAR_PIVOT) {
        let mut x = vec![0.0; n];
        x[r] = g.max_abs().max(1.0);
        lu.solve_in_place(&mut x);
        let tr = generator.trace(&x);
        if tr.is_finite() && tr > 0.0 {
            x.iter_mut().for_each(|v| *v /= tr);
            let residual = relative_residual(g, &x);
            let min_ev = generator.min_eigenvalue(&x);
            if residual < options.residual_tolerance && min_ev > -1e-9 {
                return Ok(SteadyState { state: generator.unpack(&x), method: SteadyStateMethod::NullSpace, residual });
            }
        }
    }
    let Some(initial) = options.initial.as_ref() else {
        return Err(Error::NonUniqueSteadyState);
    };
    let x0 = generator.pack(initial)?;
    let evolve = EvolveOptions {
        dt: options.integration_dt,
        sample_interval: options.integration_time / 20.0,
        integrator: Integrator::TrBdf2,
        check_positivity: true,
        max_halvings: 4,
    };
    let traj = evolve_flow(&generator, &x0, options.integration_time, &evolve)?;
    let mut x = traj.final_state;
    let tr = generator.trace(&x);
    x.iter_mut().for_each(|v| *v /= tr);
    let residual = relative_residual(g, &x);
    if residual > options.residual_tolerance.max(1e-7) {
        return Err(Error::NoConvergence(format!("stationarity residual {residual:.3e} after integration")));
    }
    Ok(SteadyState { state: generator.unpack(&x), method: SteadyStateMethod::LongTimeIntegration, residual })
}
