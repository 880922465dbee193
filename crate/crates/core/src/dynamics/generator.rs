//! Real-valued Lindblad generator restricted to the coherences reachable
//! from the initial state.
//!
//! The density matrix is stored as populations ρ_ii plus Re/Im of ρ_ij for
//! i < j. Only pairs (i, j) connected to the diagonal or to the initial
//! support through the Hamiltonian and the jump operators are kept; for the
//! rotating-wave Hamiltonian these are the pairs with equal total excitation
//! n + m_F. Coordinates are ordered by reverse Cuthill–McKee so implicit
//! steps can use a banded factorization.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{reverse_cuthill_mckee, CsrMatrix};
use crate::quantum::{DensityState, HilbertSpace};

use super::model::OpenSystem;

/// Real coordinates of one stored pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coord {
    Diagonal(usize),
    OffDiagonal { re: usize, im: usize },
}

/// Sector-restricted generator dx/dt = G x.
#[derive(Debug, Clone)]
pub struct LiouvilleGenerator {
    space: HilbertSpace,
    pairs: Vec<(usize, usize)>,
    coords: Vec<Coord>,
    pair_index: HashMap<(usize, usize), usize>,
    diag_coord: Vec<usize>,
    matrix: CsrMatrix<f64>,
    loss: Vec<(usize, f64)>,
    blocks: Vec<Vec<usize>>,
}

impl LiouvilleGenerator {
    /// Builds the generator on the smallest closed set of pairs containing
    /// the diagonal and the support of `seed`.
    pub fn new(system: &OpenSystem, seed: Option<&DensityState>) -> Result<Self> {
        let space = system.space;
        let dim = space.dim();
        if system.hamiltonian.matrix.nrows() != dim || system.boundary_loss.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: system.hamiltonian.matrix.nrows() });
        }
        let jumps: Vec<&CsrMatrix<Complex64>> = system.jumps.iter().map(|j| &j.matrix).collect();
        let mut decay = CsrMatrix::<Complex64>::from_diagonal(
            &system.boundary_loss.iter().map(|&l| Complex64::new(l, 0.0)).collect::<Vec<_>>(),
        );
        for l in &jumps {
            decay = decay.add(&l.adjoint().matmul(l));
        }
        let heff = system.hamiltonian.matrix.sub(&decay.scale(Complex64::new(0.0, 0.5)));
        let heff_t = heff.transpose();
        let jumps_t: Vec<CsrMatrix<Complex64>> = jumps.iter().map(|l| l.transpose()).collect();

        let pairs = closure(dim, seed, &heff_t, &jumps_t);
        let mut pair_index = HashMap::with_capacity(pairs.len());
        for (k, &p) in pairs.iter().enumerate() {
            pair_index.insert(p, k);
        }

        let mut natural = Vec::with_capacity(pairs.len());
        let mut n_coords = 0;
        for &(a, b) in &pairs {
            if a == b {
                natural.push(Coord::Diagonal(n_coords));
                n_coords += 1;
            } else {
                natural.push(Coord::OffDiagonal { re: n_coords, im: n_coords + 1 });
                n_coords += 2;
            }
        }

        let triplets = assemble(&pairs, &natural, &pair_index, &heff, &jumps);
        let natural_matrix = CsrMatrix::from_triplets(n_coords, n_coords, triplets);

        let mut adjacency = vec![Vec::new(); n_coords];
        for (i, j, _) in natural_matrix.triplets() {
            if i != j {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
        for c in natural.iter() {
            if let Coord::OffDiagonal { re, im } = *c {
                adjacency[re].push(im);
                adjacency[im].push(re);
            }
        }
        adjacency.iter_mut().for_each(|a| {
            a.sort_unstable();
            a.dedup();
        });
        let perm = reverse_cuthill_mckee(&adjacency);
        let mut inv = vec![0usize; n_coords];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let matrix = natural_matrix.permute_symmetric(&perm);
        let coords: Vec<Coord> = natural
            .iter()
            .map(|c| match *c {
                Coord::Diagonal(i) => Coord::Diagonal(inv[i]),
                Coord::OffDiagonal { re, im } => Coord::OffDiagonal { re: inv[re], im: inv[im] },
            })
            .collect();
        let mut diag_coord = vec![usize::MAX; dim];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if a == b {
                if let Coord::Diagonal(i) = coords[k] {
                    diag_coord[a] = i;
                }
            }
        }
        let loss = system
            .boundary_loss
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(i, &l)| (diag_coord[i], l))
            .collect();
        let blocks = coherence_blocks(dim, &pairs);
        Ok(LiouvilleGenerator { space, pairs, coords, pair_index, diag_coord, matrix, loss, blocks })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    /// Number of real coordinates.
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    /// Number of stored matrix pairs (i ≤ j).
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Coordinate holding the population of basis state `i`.
    pub fn population_coord(&self, i: usize) -> usize {
        self.diag_coord[i]
    }

    /// `(coordinate, rate)` of every population drained by the boundary.
    pub fn loss_channels(&self) -> &[(usize, f64)] {
        &self.loss
    }

    /// Instantaneous loss rate ℓᵀx.
    pub fn loss_rate(&self, x: &[f64]) -> f64 {
        self.loss.iter().map(|&(c, l)| l * x[c]).sum()
    }

    pub fn trace(&self, x: &[f64]) -> f64 {
        self.diag_coord.iter().map(|&c| x[c]).sum()
    }

    pub fn populations(&self, x: &[f64]) -> Vec<f64> {
        self.diag_coord.iter().map(|&c| x[c]).collect()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.mul_vec(x, y);
    }

    /// Packs a density matrix; entries outside the stored pairs must vanish.
    pub fn pack(&self, rho: &DensityState) -> Result<Vec<f64>> {
        let dim = self.space.dim();
        if rho.matrix.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rho.matrix.nrows() });
        }
        let mut x = vec![0.0; self.len()];
        for a in 0..dim {
            for b in a..dim {
                let z = rho.matrix[(a, b)];
                match self.pair_index.get(&(a, b)) {
                    Some(&k) => match self.coords[k] {
                        Coord::Diagonal(i) => x[i] = z.re,
                        Coord::OffDiagonal { re, im } => {
                            x[re] = z.re;
                            x[im] = z.im;
                        }
                    },
                    None if z.norm() > 0.0 => {
                        return Err(Error::InvalidConfig(format!(
                            "state has support on pair ({a}, {b}) outside the generator"
                        )))
                    }
                    None => {}
                }
            }
        }
        Ok(x)
    }

    pub fn unpack(&self, x: &[f64]) -> DensityState {
        let dim = self.space.dim();
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (k, &(a, b)) in self.pairs.iter().enumerate() {
            match self.coords[k] {
                Coord::Diagonal(i) => m[(a, a)] = Complex64::new(x[i], 0.0),
                Coord::OffDiagonal { re, im } => {
                    m[(a, b)] = Complex64::new(x[re], x[im]);
                    m[(b, a)] = Complex64::new(x[re], -x[im]);
                }
            }
        }
        DensityState { space: self.space, matrix: m }
    }

    /// Smallest eigenvalue of the state, computed block by block over groups
    /// of basis states linked by stored coherences.
    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        let mut min = f64::INFINITY;
        for block in &self.blocks {
            if block.len() == 1 {
                min = min.min(x[self.diag_coord[block[0]]]);
                continue;
            }
            let n = block.len();
            let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
            for (p, &a) in block.iter().enumerate() {
                for (q, &b) in block.iter().enumerate().skip(p) {
                    if let Some(&k) = self.pair_index.get(&(a, b)) {
                        match self.coords[k] {
                            Coord::Diagonal(i) => m[(p, p)] = Complex64::new(x[i], 0.0),
                            Coord::OffDiagonal { re, im } => {
                                m[(p, q)] = Complex64::new(x[re], x[im]);
                                m[(q, p)] = Complex64::new(x[re], -x[im]);
                            }
                        }
                    }
                }
            }
            let ev = m.symmetric_eigenvalues();
            min = ev.iter().copied().fold(min, f64::min);
        }
        min
    }
}

fn canonical(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Breadth-first closure of the pair set under the generator's coupling
/// structure. `heff_t` and `jumps_t` are transposes, so row `c` lists the
/// rows of the original operator with a nonzero entry in column `c`.
fn closure(
    dim: usize,
    seed: Option<&DensityState>,
    heff_t: &CsrMatrix<Complex64>,
    jumps_t: &[CsrMatrix<Complex64>],
) -> Vec<(usize, usize)> {
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut queue = VecDeque::new();
    let push = |p: (usize, usize), seen: &mut HashMap<(usize, usize), ()>, q: &mut VecDeque<_>| {
        if seen.insert(p, ()).is_none() {
            q.push_back(p);
        }
    };
    for i in 0..dim {
        push((i, i), &mut seen, &mut queue);
    }
    if let Some(rho) = seed {
        for a in 0..dim {
            for b in a + 1..dim {
                if rho.matrix[(a, b)].norm() > 0.0 {
                    push((a, b), &mut seen, &mut queue);
                }
            }
        }
    }
    while let Some((c, d)) = queue.pop_front() {
        for (c, d) in [(c, d), (d, c)] {
            for &a in heff_t.row(c).0 {
                push(canonical(a, d), &mut seen, &mut queue);
            }
            for &b in heff_t.row(d).0 {
                push(canonical(c, b), &mut seen, &mut queue);
            }
            for lt in jumps_t {
                let (ra, _) = lt.row(c);
                let (rb, _) = lt.row(d);
                for &a in ra {
                    for &b in rb {
                        push(canonical(a, b), &mut seen, &mut queue);
                    }
                }
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = seen.into_keys().collect();
    pairs.sort_unstable();
    pairs
}

fn assemble(
    pairs: &[(usize, usize)],
    coords: &[Coord],
    pair_index: &HashMap<(usize, usize), usize>,
    heff: &CsrMatrix<Complex64>,
    jumps: &[&CsrMatrix<Complex64>],
) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::new();
    let i_unit = Complex64::new(0.0, 1.0);
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let target = coords[k];
        let mut add = |kappa: Complex64, c: usize, d: usize| {
            let (src, sign) = if c <= d { ((c, d), 1.0) } else { ((d, c), -1.0) };
            let idx = *pair_index.get(&src).expect("pair set is closed");
            let (xr, xi) = match coords[idx] {
                Coord::Diagonal(i) => (i, None),
                Coord::OffDiagonal { re, im } => (re, Some(im)),
            };
            // kappa * (x_re + i sign x_im)
            match target {
                Coord::Diagonal(row) => {
                    t.push((row, xr, kappa.re));
                    if let Some(xi) = xi {
                        t.push((row, xi, -sign * kappa.im));
                    }
                }
                Coord::OffDiagonal { re, im } => {
                    t.push((re, xr, kappa.re));
                    t.push((im, xr, kappa.im));
                    if let Some(xi) = xi {
                        t.push((re, xi, -sign * kappa.im));
                        t.push((im, xi, sign * kappa.re));
                    }
                }
            }
        };
        let (hc, hv) = heff.row(a);
        for (&c, &h) in hc.iter().zip(hv) {
            add(-i_unit * h, c, b);
        }
        let (hc, hv) = heff.row(b);
        for (&d, &h) in hc.iter().zip(hv) {
            add(i_unit * h.conj(), a, d);
        }
        for l in jumps {
            let (ca, va) = l.row(a);
            let (cb, vb) = l.row(b);
            for (&c, &la) in ca.iter().zip(va) {
                for (&d, &lb) in cb.iter().zip(vb) {
                    add(la * lb.conj(), c, d);
                }
            }
        }
    }
    t
}

/// Groups basis states connected by stored off-diagonal pairs.
fn coherence_blocks(dim: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in pairs {
        if a != b {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..dim {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
    blocks.sort();
    blocks
}
