//! Classical master equation on the (m_F, n) states.
//!
//! Coherent exchange is replaced by the incoherent rate
//! W = 2 g² γ / (γ² + δ²), where g is the coupling matrix element, δ the
//! detuning of the pair and γ the mean total decay rate of the two states.
//! Valid when g ≪ γ.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::quantum::{raising_element, HamiltonianForm, HilbertSpace};

use super::integrate::{evolve_flow, mean_n_of, CoolingTrajectory, EvolveOptions, LinearFlow};
use super::model::{AxisModel, Boundary};

/// Population generator dp/dt = Q p.
#[derive(Debug, Clone)]
pub struct RateModel {
    space: HilbertSpace,
    matrix: CsrMatrix<f64>,
    loss: Vec<(usize, f64)>,
    diag: Vec<usize>,
}

impl RateModel {
    pub fn new(model: &AxisModel, boundary: Boundary) -> Self {
        let s = model.space;
        let dim = s.dim();
        let n_max = s.n_max;
        let raise = model.raising_rate();
        let lower = model.lowering_rate();
        let loss_rates = model.boundary_loss(boundary);

        // Total decay rate of each state, including events that leave it unchanged.
        let decay: Vec<f64> = (0..dim)
            .map(|i| {
                let (_, n) = s.quantum_numbers(i);
                let up = if n < n_max { raise * (n as f64 + 1.0) } else { 0.0 };
                model.pump_rate + lower * n as f64 + up + loss_rates[i]
            })
            .collect();

        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        let transfer = |from: usize, to: usize, rate: f64, t: &mut Vec<(usize, usize, f64)>| {
            if rate > 0.0 && from != to {
                t.push((to, from, rate));
                t.push((from, from, -rate));
            }
        };
        let omega = model.hamiltonian.coupling;
        let delta_c = model.exchange_detuning();
        let delta_h = model.hamiltonian.delta_off + model.hamiltonian.ac_stark_shift_per_mf + model.hamiltonian.omega;
        let lorentz = |g2: f64, gamma: f64, delta: f64| 2.0 * g2 * gamma / (gamma * gamma + delta * delta);
        for m in s.m_values() {
            for n in 0..=n_max {
                let i = s.index(m, n);
                if m < s.f_total as i32 {
                    let r = raising_element(s.f_total, m);
                    // |m, n⟩ ↔ |m+1, n−1⟩
                    if n >= 1 {
                        let j = s.index(m + 1, n - 1);
                        let g2 = omega * omega * n as f64 * r * r;
                        let w = lorentz(g2, 0.5 * (decay[i] + decay[j]), delta_c);
                        transfer(i, j, w, &mut t);
                        transfer(j, i, w, &mut t);
                    }
                    // |m, n⟩ ↔ |m+1, n+1⟩ (counter-rotating)
                    if model.hamiltonian.form == HamiltonianForm::Full && n < n_max {
                        let j = s.index(m + 1, n + 1);
                        let g2 = omega * omega * (n + 1) as f64 * r * r;
                        let w = lorentz(g2, 0.5 * (decay[i] + decay[j]), delta_h);
                        transfer(i, j, w, &mut t);
                        transfer(j, i, w, &mut t);
                    }
                }
                for delta in [-1, -2] {
                    let w = model.branching.weight(m, delta);
                    if w > 0.0 {
                        transfer(i, s.index(m + delta, n), model.pump_rate * w, &mut t);
                    }
                }
                if n >= 1 {
                    transfer(i, s.index(m, n - 1), lower * n as f64, &mut t);
                }
                if n < n_max {
                    transfer(i, s.index(m, n + 1), raise * (n as f64 + 1.0), &mut t);
                }
                if loss_rates[i] > 0.0 {
                    t.push((i, i, -loss_rates[i]));
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(dim, dim, t);
        let loss = loss_rates.iter().enumerate().filter(|(_, &l)| l > 0.0).map(|(i, &l)| (i, l)).collect();
        RateModel { space: s, matrix, loss, diag: (0..dim).collect() }
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }
}

impl LinearFlow for RateModel {
    fn space(&self) -> HilbertSpace {
        self.space
    }
    fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }
    fn loss_channels(&self) -> &[(usize, f64)] {
        &self.loss
    }
    fn populations(&self, x: &[f64]) -> Vec<f64> {
        self.diag.iter().map(|&i| x[i]).collect()
    }
    fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        x.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Stationary populations of the classical model.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePopulations {
    pub space: HilbertSpace,
    /// Population of every basis state, in `space` ordering.
    pub populations: Vec<f64>,
    pub mean_n: f64,
}

impl RatePopulations {
    pub fn population(&self, m: i32, n: usize) -> f64 {
        self.populations[self.space.index(m, n)]
    }
}

/// Stationary solution of the classical model with a reflecting top level.
pub fn rate_equation_steady_state(model: &AxisModel) -> Result<RatePopulations> {
    let rm = RateModel::new(model, Boundary::Reflecting);
    let dim = model.space.dim();
    let mut q: DMatrix<f64> = rm.matrix.to_dense();
    let scale = q.amax().max(1.0);
    for j in 0..dim {
        q[(0, j)] = scale;
    }
    let mut rhs = DVector::zeros(dim);
    rhs[0] = scale;
    let svd_min = {
        let sv = q.clone().svd(false, false).singular_values;
        sv.min() / sv.max()
    };
    if !(svd_min > 1e-13) {
        return Err(Error::SingularBalanceMatrix);
    }
    let p = q.lu().solve(&rhs).ok_or(Error::SingularBalanceMatrix)?;
    let populations: Vec<f64> = p.iter().map(|&v| v.max(0.0)).collect();
    let mean_n = mean_n_of(model.space, &populations);
    Ok(RatePopulations { space: model.space, populations, mean_n })
}

/// Time evolution of the classical model from `p0`.
pub fn rate_equation_evolve(
    model: &AxisModel,
    boundary: Boundary,
    p0: &[f64],
    t_final: f64,
    options: &EvolveOptions,
) -> Result<CoolingTrajectory> {
    if p0.len() != model.space.dim() {
        return Err(Error::DimensionMismatch { expected: model.space.dim(), found: p0.len() });
    }
    let rm = RateModel::new(model, boundary);
    let mut opts = options.clone();
    opts.check_positivity = false;
    evolve_flow(&rm, p0, t_final, &opts)
}
