//! Dissipator rates and the per-axis open-system model.

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::quantum::{
    fock_annihilation, hamiltonian_from_params, HamiltonianForm, HamiltonianParams, HilbertSpace,
    OperatorMatrix,
};
use crate::trap::{
    lamb_dicke, spin_motion_coupling, zeeman_splitting, Axis, FieldConfig, LaserConfig, TrapConfig,
};
use num_complex::Complex64;

use super::branching::BranchingTable;

/// Rates of the incoherent processes.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorSet {
    /// Photon scattering rate of the pumping light (1/s).
    pub pump_rate: f64,
    pub branching: BranchingTable,
    /// Motional quanta added per scattering event, per axis.
    pub recoil_heating: [f64; 3],
    /// Background heating (quanta/s), per axis.
    pub background_heating: [f64; 3],
    /// Bath occupation of the background heating; `None` is the
    /// high-temperature limit with equal up and down rates.
    pub background_occupation: Option<f64>,
}

impl DissipatorSet {
    /// Rates for `laser` on `trap`; recoil per axis is η_i² times `recoil_geometry[i]`.
    pub fn from_laser(
        trap: &TrapConfig,
        laser: &LaserConfig,
        f_total: u32,
        recoil_geometry: [f64; 3],
        background_heating: [f64; 3],
    ) -> Result<Self> {
        let eta = trap.lamb_dicke_all()?;
        let set = DissipatorSet {
            pump_rate: laser.pump_rate(),
            branching: BranchingTable::sigma_minus(f_total),
            recoil_heating: [0, 1, 2].map(|i| eta[i] * eta[i] * recoil_geometry[i]),
            background_heating,
            background_occupation: None,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.pump_rate) {
            return Err(Error::InvalidConfig(format!("pump rate must be >= 0, got {}", self.pump_rate)));
        }
        for i in 0..3 {
            if !ok(self.recoil_heating[i]) || !ok(self.background_heating[i]) {
                return Err(Error::InvalidConfig(format!(
                    "heating rates on axis {} must be >= 0",
                    Axis::ALL[i]
                )));
            }
        }
        if let Some(nbar) = self.background_occupation {
            if !(nbar.is_finite() && nbar > 0.0) {
                return Err(Error::InvalidConfig(format!("bath occupation must be > 0, got {nbar}")));
            }
        }
        Ok(())
    }

    /// Background (up, down) rate coefficients for the â† and â channels.
    pub fn background_rates(&self, axis: Axis) -> (f64, f64) {
        let h = self.background_heating[axis.index()];
        match self.background_occupation {
            None => (h, h),
            Some(nbar) => (h, h * (nbar + 1.0) / nbar),
        }
    }

    /// Same set with every heating channel switched off.
    pub fn without_heating(&self) -> Self {
        DissipatorSet { recoil_heating: [0.0; 3], background_heating: [0.0; 3], ..self.clone() }
    }
}

/// Treatment of the top Fock level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Truncated ladder; probability is conserved.
    Reflecting,
    /// Raising processes out of the top level remove the atom.
    Absorbing,
}

/// Options shared by all axis models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    /// Coupling of each axis relative to the y-axis coupling.
    pub coupling_factor: [f64; 3],
    pub form: HamiltonianForm,
    /// Fock truncation; `None` uses the trap depth of the axis.
    pub n_max: Option<usize>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { coupling_factor: [0.3, 1.0, 0.3], form: HamiltonianForm::RotatingWave, n_max: None }
    }
}

/// Single-axis spin-motion problem with all its rates.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisModel {
    pub axis: Axis,
    pub space: HilbertSpace,
    pub hamiltonian: HamiltonianParams,
    pub pump_rate: f64,
    pub branching: BranchingTable,
    /// Rate coefficient of each recoil â and â† channel (1/s).
    pub recoil_rate: f64,
    /// Background â† rate coefficient (1/s).
    pub heating_up: f64,
    /// Background â rate coefficient (1/s).
    pub heating_down: f64,
}

impl AxisModel {
    pub fn new(
        trap: &TrapConfig,
        field: &FieldConfig,
        laser: &LaserConfig,
        dissipators: &DissipatorSet,
        axis: Axis,
        options: &ModelOptions,
    ) -> Result<Self> {
        lamb_dicke(trap, axis)?;
        if dissipators.branching.f_total() != field.f_total {
            return Err(Error::DimensionMismatch {
                expected: field.f_total as usize,
                found: dissipators.branching.f_total() as usize,
            });
        }
        let n_max = options.n_max.unwrap_or(trap.trap_depth_quanta[axis.index()]);
        let space = HilbertSpace::new(field.f_total, n_max)?;
        let factor = if axis == Axis::Y { 1.0 } else { options.coupling_factor[axis.index()] };
        let hamiltonian = HamiltonianParams {
            omega: trap.omega(axis),
            delta_off: zeeman_splitting(field),
            coupling: factor * spin_motion_coupling(trap, field),
            ac_stark_shift_per_mf: laser.ac_stark_shift_per_mf,
            form: options.form,
        };
        let (up, down) = dissipators.background_rates(axis);
        Ok(AxisModel {
            axis,
            space,
            hamiltonian,
            pump_rate: dissipators.pump_rate,
            branching: dissipators.branching.clone(),
            recoil_rate: dissipators.pump_rate * dissipators.recoil_heating[axis.index()],
            heating_up: up,
            heating_down: down,
        })
    }

    /// Total rate coefficient of the raising channels.
    pub fn raising_rate(&self) -> f64 {
        self.recoil_rate + self.heating_up
    }

    /// Total rate coefficient of the lowering channels.
    pub fn lowering_rate(&self) -> f64 {
        self.recoil_rate + self.heating_down
    }

    /// Detuning of the first-order exchange from resonance (rad/s).
    pub fn exchange_detuning(&self) -> f64 {
        self.hamiltonian.delta_off + self.hamiltonian.ac_stark_shift_per_mf - self.hamiltonian.omega
    }

    pub fn hamiltonian_operator(&self) -> OperatorMatrix {
        hamiltonian_from_params(self.space, &self.hamiltonian)
    }

    /// Jump operators, each already scaled by the square root of its rate.
    pub fn jump_operators(&self) -> Vec<OperatorMatrix> {
        let s = self.space;
        let mut out = Vec::new();
        if self.pump_rate > 0.0 {
            for m in s.m_values() {
                for delta in [0, -1, -2] {
                    let w = self.branching.weight(m, delta);
                    if w <= 0.0 {
                        continue;
                    }
                    let amp = (self.pump_rate * w).sqrt();
                    let t = (0..=s.n_max)
                        .map(|n| (s.index(m + delta, n), s.index(m, n), Complex64::new(amp, 0.0)))
                        .collect();
                    out.push(OperatorMatrix {
                        space: s,
                        matrix: CsrMatrix::from_triplets(s.dim(), s.dim(), t),
                    });
                }
            }
        }
        let a = fock_annihilation(s);
        let ad = a.adjoint();
        let lower = self.lowering_rate();
        let raise = self.raising_rate();
        if lower > 0.0 {
            out.push(a.scale(lower.sqrt()));
        }
        if raise > 0.0 {
            out.push(ad.scale(raise.sqrt()));
        }
        out
    }

    /// Loss rate of every basis state into the absorbing boundary.
    pub fn boundary_loss(&self, boundary: Boundary) -> Vec<f64> {
        let s = self.space;
        let mut loss = vec![0.0; s.dim()];
        if boundary == Boundary::Absorbing {
            let r = self.raising_rate() * (s.n_max as f64 + 1.0);
            for m in s.m_values() {
                loss[s.index(m, s.n_max)] = r;
            }
        }
        loss
    }

    pub fn open_system(&self, boundary: Boundary) -> OpenSystem {
        OpenSystem {
            space: self.space,
            hamiltonian: self.hamiltonian_operator(),
            jumps: self.jump_operators(),
            boundary_loss: self.boundary_loss(boundary),
        }
    }
}

/// Hamiltonian, jump operators and boundary loss of a Lindblad problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystem {
    pub space: HilbertSpace,
    /// H/ħ (rad/s).
    pub hamiltonian: OperatorMatrix,
    /// Jump operators including the square root of their rates.
    pub jumps: Vec<OperatorMatrix>,
    /// Extra decay rate of each basis state into the boundary (1/s).
    pub boundary_loss: Vec<f64>,
}

impl OpenSystem {
    /// Closed system with no dissipation.
    pub fn unitary(hamiltonian: OperatorMatrix) -> Self {
        let space = hamiltonian.space;
        OpenSystem { space, hamiltonian, jumps: Vec::new(), boundary_loss: vec![0.0; space.dim()] }
    }

    pub fn is_leaky(&self) -> bool {
        self.boundary_loss.iter().any(|&l| l > 0.0)
    }

    /// Same system with the boundary loss removed.
    pub fn reflecting(&self) -> Self {
        OpenSystem { boundary_loss: vec![0.0; self.space.dim()], ..self.clone() }
    }
}
