//! Spin ⊗ Fock operators and the single-axis Hamiltonians.

use drc_core::quantum::{
    build_hamiltonian, fock_annihilation, hamiltonian_from_params, raising_element, spin_operators, DensityState,
    HamiltonianForm, HamiltonianParams, HilbertSpace,
};
use drc_core::trap::{resonant_field, spin_motion_coupling};
use drc_core::{FieldConfig, TrapConfig};
use proptest::prelude::*;

fn params(omega: f64, delta: f64, coupling: f64, shift: f64, form: HamiltonianForm) -> HamiltonianParams {
    HamiltonianParams { omega, delta_off: delta, coupling, ac_stark_shift_per_mf: shift, form }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

#[test]
fn spin_major_ordering() {
    let s = HilbertSpace::new(4, 10).unwrap();
    assert_eq!(s.dim(), 99);
    assert_eq!(s.index(-4, 0), 0);
    assert_eq!(s.index(-4, 10), 10);
    assert_eq!(s.index(-3, 0), 11);
    assert_eq!(s.index(4, 10), 98);
}

#[test]
fn lowering_annihilates_bottom_of_ladder() {
    let s = HilbertSpace::new(4, 3).unwrap();
    let (_, _, fm) = spin_operators(s);
    for n in 0..=3 {
        let col = s.index(-4, n);
        for row in 0..s.dim() {
            assert_eq!(fm.get(row, col).norm(), 0.0);
        }
    }
}

#[test]
fn decoupled_spectrum_is_closed_form() {
    let s = HilbertSpace::new(4, 12).unwrap();
    let (w, d) = (2.0 * std::f64::consts::PI * 83e3, 2.0 * std::f64::consts::PI * 31e3);
    let h = hamiltonian_from_params(s, &params(w, d, 0.0, 0.0, HamiltonianForm::Full));
    let got = sorted(h.hermitian_eigenvalues());
    let mut want = Vec::new();
    for m in -4..=4 {
        for n in 0..=12 {
            want.push(w * n as f64 + d * m as f64);
        }
    }
    let want = sorted(want);
    let scale = w * 16.0;
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10 * scale, "{a} vs {b}");
    }
}

#[test]
fn resonance_makes_exchange_pairs_degenerate() {
    let trap = TrapConfig::cesium_khz([136.0, 83.0, 215.0], [25; 3]).unwrap();
    let field = FieldConfig { b_gradient: 0.0, ..FieldConfig::default() };
    let field = field.with_offset(resonant_field(&trap, &field, drc_core::Axis::Y));
    let s = HilbertSpace::new(4, 10).unwrap();
    let h = build_hamiltonian(&trap, &field, s, 0.0).unwrap();
    let scale = trap.omega[1];
    for n in 1..=10 {
        let a = h.get(s.index(-4, n), s.index(-4, n)).re;
        let b = h.get(s.index(-3, n - 1), s.index(-3, n - 1)).re;
        assert!((a - b).abs() < 1e-12 * scale * 10.0);
    }
}

#[test]
fn resonant_pair_splitting() {
    // At resonance the RWA block {|−4,1⟩, |−3,0⟩} is closed with off-diagonal
    // element Ω·sqrt(1)·sqrt(F(F+1) − (−4)(−3)) = Ω·sqrt(8).
    let trap = TrapConfig::cesium_khz([136.0, 83.0, 215.0], [25; 3]).unwrap();
    let field = FieldConfig::default();
    let omega = spin_motion_coupling(&trap, &field);
    let w = trap.omega[1];
    let s = HilbertSpace::new(4, 10).unwrap();
    let rwa = hamiltonian_from_params(s, &params(w, w, omega, 0.0, HamiltonianForm::RotatingWave));
    let ev = rwa.hermitian_eigenvalues();
    let target = omega * 8f64.sqrt();
    assert!(ev.iter().any(|e| (e - target).abs() < 1e-9 * target));
    assert!(ev.iter().any(|e| (e + target).abs() < 1e-9 * target));

    // The laboratory-frame pair near E = −3ω splits by the same amount up to
    // counter-rotating corrections of relative order Ω/ω.
    let full = hamiltonian_from_params(s, &params(w, w, omega, 0.0, HamiltonianForm::Full));
    let ev = sorted(full.hermitian_eigenvalues());
    let near: Vec<f64> = ev.iter().copied().filter(|e| (e + 3.0 * w).abs() < 0.5 * w).collect();
    assert_eq!(near.len(), 2);
    let split = near[1] - near[0];
    assert!((split / (2.0 * target) - 1.0).abs() < 0.05, "split {split} vs {}", 2.0 * target);
}

#[test]
fn truncation_stability_of_low_spectrum() {
    let trap = TrapConfig::cesium_khz([136.0, 83.0, 215.0], [40; 3]).unwrap();
    let field = FieldConfig::default();
    let omega = spin_motion_coupling(&trap, &field);
    let w = trap.omega[1];
    let n = 30;
    let ev = |n_max| {
        let s = HilbertSpace::new(4, n_max).unwrap();
        sorted(hamiltonian_from_params(s, &params(w, w, omega, 0.0, HamiltonianForm::Full)).hermitian_eigenvalues())
    };
    let (a, b) = (ev(n), ev(n + 5));
    // Only levels carrying thermal weight at ⟨n⟩ = 2 are compared; near the
    // cutoff the lab-frame coupling Ω·sqrt(N) is a sizable fraction of ω.
    let count = 9 * (n / 3);
    let scale = w * (n as f64);
    let mut worst = 0.0f64;
    for k in 0..count {
        worst = worst.max((a[k] - b[k]).abs() / scale);
    }
    assert!(worst < 1e-6, "worst relative change {worst:e}");
}

#[test]
fn thermal_state_is_physical() {
    let s = HilbertSpace::new(4, 30).unwrap();
    let rho = DensityState::thermal(s, -4, 2.0);
    assert!((rho.trace() - 1.0).abs() < 1e-12);
    assert!(rho.min_eigenvalue() >= -1e-15);
    assert!((rho.mean_n() - 2.0).abs() < 2e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonians_are_hermitian(
        w in 1e5f64..2e6,
        d in -2e6f64..2e6,
        c in 0.0f64..1e5,
        shift in -1e5f64..1e5,
        full in any::<bool>(),
        n_max in 1usize..15,
    ) {
        let form = if full { HamiltonianForm::Full } else { HamiltonianForm::RotatingWave };
        let s = HilbertSpace::new(4, n_max).unwrap();
        let h = hamiltonian_from_params(s, &params(w, d, c, shift, form));
        prop_assert!(h.relative_hermiticity_defect() < 1e-12);
    }

    #[test]
    fn canonical_commutator_below_top(n_max in 1usize..20, f in 1u32..6) {
        let s = HilbertSpace::new(f, n_max).unwrap();
        let a = fock_annihilation(s);
        let c = a.commutator(&a.adjoint());
        for i in 0..s.dim() {
            let (_, n) = s.quantum_numbers(i);
            let want = if n < n_max { 1.0 } else { -(n_max as f64) };
            prop_assert!((c.get(i, i).re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn raising_elements_match_ladder(f in 1u32..8) {
        let fi = f as i32;
        for m in -fi..fi {
            let e = raising_element(f, m);
            prop_assert!((e * e - ((fi - m) * (fi + m + 1)) as f64).abs() < 1e-12);
        }
        prop_assert_eq!(raising_element(f, fi), 0.0);
    }
}
