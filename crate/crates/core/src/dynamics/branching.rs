//! Clebsch–Gordan coefficients and optical-pumping branching ratios for σ⁻
//! excitation on an F → F' = F + 1 cycling transition.

use std::fmt::Write as _;

fn factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// ⟨j1 m1; j2 m2 | J M⟩ for integer angular momenta (Racah formula).
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if m1 + m2 != m
        || m1.abs() > j1
        || m2.abs() > j2
        || m.abs() > j
        || j < (j1 - j2).abs()
        || j > j1 + j2
    {
        return 0.0;
    }
    let pre = ((2 * j + 1) as f64 * factorial(j + j1 - j2) * factorial(j - j1 + j2) * factorial(j1 + j2 - j)
        / factorial(j1 + j2 + j + 1))
        .sqrt();
    let norm = (factorial(j + m)
        * factorial(j - m)
        * factorial(j1 - m1)
        * factorial(j1 + m1)
        * factorial(j2 - m2)
        * factorial(j2 + m2))
        .sqrt();
    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(j1 + j2 - j - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j - j2 + m1 + k)
            * factorial(j - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    pre * norm * sum
}

/// Spin-change probabilities per initial m_F after one σ⁻ scattering event.
///
/// Absorption takes |F, m⟩ to |F+1, m−1⟩; spontaneous emission of a photon
/// with polarization q returns to |F, m−1−q⟩. The net change Δm = −1−q is
/// therefore 0, −1 or −2.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingTable {
    f_total: u32,
    /// `weights[m + F][k]` is the probability of Δm = −k.
    weights: Vec<[f64; 3]>,
}

impl BranchingTable {
    pub fn sigma_minus(f_total: u32) -> Self {
        let f = f_total as i64;
        let fe = f + 1;
        let mut weights = Vec::with_capacity(2 * f_total as usize + 1);
        for m in -f..=f {
            let me = m - 1;
            let mut w = [0.0; 3];
            for (k, wk) in w.iter_mut().enumerate() {
                let mg = m - k as i64;
                let q = me - mg;
                let c = clebsch_gordan(f, mg, 1, q, fe, me);
                *wk = c * c;
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            weights.push(w);
        }
        BranchingTable { f_total, weights }
    }

    pub fn f_total(&self) -> u32 {
        self.f_total
    }

    /// Probability that a scattering event from `m` changes m_F by `delta`.
    pub fn weight(&self, m: i32, delta: i32) -> f64 {
        let f = self.f_total as i32;
        if !(-f..=f).contains(&m) || !(-2..=0).contains(&delta) || m + delta < -f {
            return 0.0;
        }
        self.weights[(m + f) as usize][(-delta) as usize]
    }

    /// Text dump `m_F, dm=0, dm=-1, dm=-2`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# m_F, p(dm=0), p(dm=-1), p(dm=-2)\n");
        let f = self.f_total as i32;
        for m in -f..=f {
            let w = &self.weights[(m + f) as usize];
            let _ = writeln!(s, "{m}, {:.6}, {:.6}, {:.6}", w[0], w[1], w[2]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed forms of ⟨j, M−q; 1, q | j+1, M⟩².
    fn stretched_cg_squared(j: f64, big_m: f64, q: i32) -> f64 {
        match q {
            1 => (j + big_m) * (j + big_m + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0)),
            0 => (j - big_m + 1.0) * (j + big_m + 1.0) / ((2.0 * j + 1.0) * (j + 1.0)),
            -1 => (j - big_m) * (j - big_m + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn racah_matches_closed_forms() {
        for j in 1..=6i64 {
            for big_m in -(j + 1)..=(j + 1) {
                for q in -1..=1i64 {
                    let m1 = big_m - q;
                    if m1.abs() > j {
                        continue;
                    }
                    let c = clebsch_gordan(j, m1, 1, q, j + 1, big_m);
                    let expected = stretched_cg_squared(j as f64, big_m as f64, q as i32);
                    assert!((c * c - expected).abs() < 1e-12, "j={j} M={big_m} q={q}");
                }
            }
        }
    }

    #[test]
    fn half_spin_coupling_values() {
        // ⟨1 1; 1 −1 | 0 0⟩ = 1/sqrt(3)
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(clebsch_gordan(1, 1, 1, 1, 1, 1), 0.0);
    }

    #[test]
    fn weights_normalized_and_never_raise() {
        let t = BranchingTable::sigma_minus(4);
        for m in -4..=4 {
            let s: f64 = (-2..=0).map(|d| t.weight(m, d)).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert_eq!(t.weight(m, 1), 0.0);
        }
    }

    #[test]
    fn stretched_state_cycles() {
        let t = BranchingTable::sigma_minus(4);
        assert!((t.weight(-4, 0) - 1.0).abs() < 1e-12);
        assert!((t.weight(-3, -1) - 0.2).abs() < 1e-12);
        assert!((t.weight(-3, 0) - 0.8).abs() < 1e-12);
        assert_eq!(t.weight(-3, -2), 0.0);
    }

    #[test]
    fn top_state_mostly_drops_two() {
        let t = BranchingTable::sigma_minus(4);
        assert!((t.weight(4, -2) - 28.0 / 45.0).abs() < 1e-12);
        assert!((t.weight(4, -1) - 16.0 / 45.0).abs() < 1e-12);
        assert!((t.weight(4, 0) - 1.0 / 45.0).abs() < 1e-12);
    }
}
