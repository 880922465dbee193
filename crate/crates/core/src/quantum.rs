//! Operators on the truncated spin ⊗ Fock space and the spin-motion
//! Hamiltonian.
//!
//! Basis ordering is spin-major: `index = (m_F + F)·(n_max + 1) + n`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::trap::{spin_motion_coupling, zeeman_splitting, FieldConfig, TrapConfig};

/// Truncated product space of a spin F and one motional mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    pub f_total: u32,
    pub n_max: usize,
}

impl HilbertSpace {
    pub fn new(f_total: u32, n_max: usize) -> Result<Self> {
        if f_total < 1 {
            return Err(Error::InvalidConfig("total spin must be at least 1".into()));
        }
        if n_max < 1 {
            return Err(Error::InvalidConfig("Fock truncation must be at least 1".into()));
        }
        Ok(HilbertSpace { f_total, n_max })
    }

    #[inline]
    pub fn spin_dim(&self) -> usize {
        2 * self.f_total as usize + 1
    }

    #[inline]
    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.spin_dim() * self.fock_dim()
    }

    /// Basis index of |m_F, n⟩.
    #[inline]
    pub fn index(&self, m: i32, n: usize) -> usize {
        let f = self.f_total as i32;
        debug_assert!((-f..=f).contains(&m) && n <= self.n_max);
        (m + f) as usize * self.fock_dim() + n
    }

    /// Quantum numbers (m_F, n) of a basis index.
    #[inline]
    pub fn quantum_numbers(&self, index: usize) -> (i32, usize) {
        let s = index / self.fock_dim();
        (s as i32 - self.f_total as i32, index % self.fock_dim())
    }

    pub fn m_values(&self) -> impl Iterator<Item = i32> {
        let f = self.f_total as i32;
        -f..=f
    }
}

/// Sparse operator acting on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub space: HilbertSpace,
    pub matrix: CsrMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpace, matrix: CsrMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: matrix.nrows() });
        }
        Ok(OperatorMatrix { space, matrix })
    }

    fn from_triplets(space: HilbertSpace, t: Vec<(usize, usize, Complex64)>) -> Self {
        OperatorMatrix { space, matrix: CsrMatrix::from_triplets(space.dim(), space.dim(), t) }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        OperatorMatrix { space, matrix: CsrMatrix::zeros(space.dim(), space.dim()) }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        OperatorMatrix { space, matrix: CsrMatrix::identity(space.dim()) }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix.get(row, col)
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { space: self.space, matrix: self.matrix.adjoint() }
    }

    pub fn add(&self, other: &Self) -> Self {
        OperatorMatrix { space: self.space, matrix: self.matrix.add(&other.matrix) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        OperatorMatrix { space: self.space, matrix: self.matrix.sub(&other.matrix) }
    }

    pub fn scale(&self, s: f64) -> Self {
        OperatorMatrix { space: self.space, matrix: self.matrix.scale(Complex64::new(s, 0.0)) }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        OperatorMatrix { space: self.space, matrix: self.matrix.matmul(&other.matrix) }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        OperatorMatrix { space: self.space, matrix: self.matrix.commutator(&other.matrix) }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.matrix.to_dense()
    }

    /// Largest |A − A†| entry relative to the largest |A| entry.
    pub fn relative_hermiticity_defect(&self) -> f64 {
        let scale = self.matrix.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            self.matrix.hermiticity_defect() / scale
        }
    }

    /// Eigenvalues of a Hermitian operator in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.to_dense().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Plain-text triplet dump: a header naming the basis ordering, then
    /// `row col re im` per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# basis index = (m_F + F)*(n_max + 1) + n; F = {}, n_max = {}, dim = {}",
            self.space.f_total,
            self.space.n_max,
            self.space.dim()
        );
        let _ = writeln!(s, "# row col re im");
        for (i, j, v) in self.matrix.triplets() {
            let _ = writeln!(s, "{i} {j} {:e} {:e}", v.re, v.im);
        }
        s
    }
}

/// Fock annihilation operator â ⊗ identity on the spin factor.
pub fn fock_annihilation(space: HilbertSpace) -> OperatorMatrix {
    let mut t = Vec::new();
    for m in space.m_values() {
        for n in 1..=space.n_max {
            t.push((space.index(m, n - 1), space.index(m, n), Complex64::new((n as f64).sqrt(), 0.0)));
        }
    }
    OperatorMatrix::from_triplets(space, t)
}

/// Number operator â†â.
pub fn fock_number(space: HilbertSpace) -> OperatorMatrix {
    let t = (0..space.dim())
        .map(|i| {
            let (_, n) = space.quantum_numbers(i);
            (i, i, Complex64::new(n as f64, 0.0))
        })
        .collect();
    OperatorMatrix::from_triplets(space, t)
}

/// Ladder matrix element sqrt(F(F+1) − m(m+1)) of F̂₊ from m to m+1.
#[inline]
pub fn raising_element(f_total: u32, m: i32) -> f64 {
    let f = f_total as f64;
    let m = m as f64;
    (f * (f + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// (F̂_y, F̂₊, F̂₋) in the F̂_y eigenbasis, each ⊗ identity on the Fock factor.
pub fn spin_operators(space: HilbertSpace) -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let f = space.f_total as i32;
    let mut fy = Vec::new();
    let mut fp = Vec::new();
    for m in -f..=f {
        for n in 0..=space.n_max {
            let i = space.index(m, n);
            if m != 0 {
                fy.push((i, i, Complex64::new(m as f64, 0.0)));
            }
            if m < f {
                let j = space.index(m + 1, n);
                fp.push((j, i, Complex64::new(raising_element(space.f_total, m), 0.0)));
            }
        }
    }
    let fy = OperatorMatrix::from_triplets(space, fy);
    let fp = OperatorMatrix::from_triplets(space, fp);
    let fm = fp.adjoint();
    (fy, fp, fm)
}

/// Form of the spin-motion Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianForm {
    /// Laboratory frame including counter-rotating terms.
    Full,
    /// Frame rotating at ω(â†â + F̂_y) with counter-rotating terms dropped.
    RotatingWave,
}

/// Frequencies (rad/s) defining a single-axis spin-motion Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    /// Motional frequency ω.
    pub omega: f64,
    /// Zeeman splitting Δ_off.
    pub delta_off: f64,
    /// Coupling Ω.
    pub coupling: f64,
    /// Additional shift per unit m_F.
    pub ac_stark_shift_per_mf: f64,
    pub form: HamiltonianForm,
}

/// Assembles H/ħ for arbitrary parameters.
///
/// `Full`: ω â†â + (Δ_off + s) F̂_y + Ω (â + â†)(F̂₊ + F̂₋).
/// `RotatingWave`: (Δ_off + s − ω) F̂_y + Ω (â F̂₊ + â† F̂₋).
pub fn hamiltonian_from_params(space: HilbertSpace, p: &HamiltonianParams) -> OperatorMatrix {
    let a = fock_annihilation(space);
    let ad = a.adjoint();
    let (fy, fp, fm) = spin_operators(space);
    let zeeman = p.delta_off + p.ac_stark_shift_per_mf;
    match p.form {
        HamiltonianForm::Full => {
            let x = a.add(&ad);
            let sx = fp.add(&fm);
            fock_number(space)
                .scale(p.omega)
                .add(&fy.scale(zeeman))
                .add(&x.matmul(&sx).scale(p.coupling))
        }
        HamiltonianForm::RotatingWave => fy
            .scale(zeeman - p.omega)
            .add(&a.matmul(&fp).add(&ad.matmul(&fm)).scale(p.coupling)),
    }
}

/// Laboratory-frame Hamiltonian of the y axis from the trap and field records.
pub fn build_hamiltonian(
    trap: &TrapConfig,
    field: &FieldConfig,
    space: HilbertSpace,
    ac_stark_shift_per_mf: f64,
) -> Result<OperatorMatrix> {
    if space.f_total != field.f_total {
        return Err(Error::DimensionMismatch {
            expected: 2 * field.f_total as usize + 1,
            found: space.spin_dim(),
        });
    }
    let p = HamiltonianParams {
        omega: trap.omega[1],
        delta_off: zeeman_splitting(field),
        coupling: spin_motion_coupling(trap, field),
        ac_stark_shift_per_mf,
        form: HamiltonianForm::Full,
    };
    Ok(hamiltonian_from_params(space, &p))
}

/// Density matrix over a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub space: HilbertSpace,
    pub matrix: DMatrix<Complex64>,
}

impl DensityState {
    /// Wraps a matrix after checking trace, Hermiticity and positivity.
    pub fn new(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let s = DensityState::new_unchecked(space, matrix)?;
        let tr = s.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("density matrix trace {tr} differs from 1")));
        }
        if s.hermiticity_defect() > 1e-10 {
            return Err(Error::InvalidConfig("density matrix is not Hermitian".into()));
        }
        if s.min_eigenvalue() < -1e-9 {
            return Err(Error::InvalidConfig("density matrix is not positive".into()));
        }
        Ok(s)
    }

    /// Wraps a matrix checking only its dimension; used for sub-normalized states.
    pub fn new_unchecked(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: matrix.nrows() });
        }
        Ok(DensityState { space, matrix })
    }

    /// Pure basis state |m_F, n⟩⟨m_F, n|.
    pub fn basis(space: HilbertSpace, m: i32, n: usize) -> Self {
        let mut p = vec![0.0; space.dim()];
        p[space.index(m, n)] = 1.0;
        Self::diagonal(space, &p)
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(space: HilbertSpace, populations: &[f64]) -> Self {
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for (i, &p) in populations.iter().enumerate() {
            m[(i, i)] = Complex64::new(p, 0.0);
        }
        DensityState { space, matrix: m }
    }

    /// Spin state m_F with a motional thermal distribution of mean `mean_n`,
    /// normalized over the truncated ladder.
    pub fn thermal(space: HilbertSpace, m: i32, mean_n: f64) -> Self {
        let w = thermal_weights(mean_n, space.n_max);
        let mut p = vec![0.0; space.dim()];
        for (n, &wn) in w.iter().enumerate() {
            p[space.index(m, n)] = wn;
        }
        Self::diagonal(space, &p)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn population(&self, m: i32, n: usize) -> f64 {
        let i = self.space.index(m, n);
        self.matrix[(i, i)].re
    }

    /// Motional populations summed over spin.
    pub fn motional_populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.space.fock_dim()];
        for i in 0..self.space.dim() {
            p[self.space.quantum_numbers(i).1] += self.matrix[(i, i)].re;
        }
        p
    }

    /// Spin populations summed over motion, indexed by m_F + F.
    pub fn spin_populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.space.spin_dim()];
        for i in 0..self.space.dim() {
            p[i / self.space.fock_dim()] += self.matrix[(i, i)].re;
        }
        p
    }

    pub fn mean_n(&self) -> f64 {
        self.motional_populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Thermal occupation probabilities for levels 0..=n_max, renormalized.
pub fn thermal_weights(mean_n: f64, n_max: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_max + 1];
    if mean_n <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    let q = mean_n / (mean_n + 1.0);
    let mut p = 1.0 / (mean_n + 1.0);
    for wn in w.iter_mut() {
        *wn = p;
        p *= q;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> HilbertSpace {
        HilbertSpace::new(4, 6).unwrap()
    }

    #[test]
    fn index_roundtrip() {
        let s = space();
        for i in 0..s.dim() {
            let (m, n) = s.quantum_numbers(i);
            assert_eq!(s.index(m, n), i);
        }
        assert_eq!(s.index(-4, 0), 0);
        assert_eq!(s.index(-3, 0), 7);
    }

    #[test]
    fn smallest_ladder() {
        let s = HilbertSpace::new(1, 1).unwrap();
        let a = fock_annihilation(s);
        assert_eq!(a.get(s.index(0, 0), s.index(0, 1)).re, 1.0);
        for i in 0..s.dim() {
            assert_eq!(a.get(i, s.index(0, 0)).re, 0.0);
        }
    }

    #[test]
    fn canonical_commutator_below_top() {
        let s = space();
        let a = fock_annihilation(s);
        let c = a.commutator(&a.adjoint());
        for i in 0..s.dim() {
            let (_, n) = s.quantum_numbers(i);
            let expected = if n < s.n_max { 1.0 } else { -(s.n_max as f64) };
            assert!((c.get(i, i).re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn number_operator_diagonal() {
        let s = space();
        let a = fock_annihilation(s);
        let num = a.adjoint().matmul(&a);
        assert!(num.sub(&fock_number(s)).matrix.max_abs() < 1e-12);
    }

    #[test]
    fn angular_momentum_algebra() {
        let s = space();
        let (fy, fp, fm) = spin_operators(s);
        let c = fp.commutator(&fm).sub(&fy.scale(2.0));
        assert!(c.matrix.max_abs() < 1e-12);
        let bottom = s.index(-4, 2);
        for i in 0..s.dim() {
            assert_eq!(fm.get(i, bottom).norm(), 0.0);
        }
    }

    #[test]
    fn fx_spectrum_is_m_values() {
        let s = HilbertSpace::new(4, 1).unwrap();
        let (_, fp, fm) = spin_operators(s);
        let fx = fp.add(&fm).scale(0.5);
        let ev = fx.hermitian_eigenvalues();
        for (k, e) in ev.iter().enumerate() {
            let m = (k / 2) as f64 - 4.0;
            assert!((e - m).abs() < 1e-10);
        }
    }

    #[test]
    fn thermal_state_is_valid() {
        let s = space();
        let rho = DensityState::thermal(s, -4, 1.0);
        DensityState::new(s, rho.matrix.clone()).unwrap();
    }

    #[test]
    fn triplet_dump_has_header() {
        let s = HilbertSpace::new(1, 1).unwrap();
        let text = fock_annihilation(s).to_triplet_text();
        assert!(text.starts_with("# basis index"));
        assert_eq!(text.lines().count(), 2 + 3);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let s = HilbertSpace::new(3, 4).unwrap();
        let trap = TrapConfig::cesium_khz([136.0, 83.0, 215.0], [25; 3]).unwrap();
        let r = build_hamiltonian(&trap, &FieldConfig::default(), s, 0.0);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
