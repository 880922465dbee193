use crate::error::{Error, Result};

use super::CsrMatrix;

/// LU factorization with partial pivoting of a banded matrix.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`, which holds the fill
/// produced by row interchanges. Multipliers stay in the position where they
/// were computed, so the forward solve replays interchanges step by step.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    min_pivot_ratio: f64,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            min_pivot_ratio: f64::INFINITY,
        };
        let mut scale = 0.0f64;
        for (i, j, v) in a.triplets() {
            *lu.at_mut(i, j) = v;
            scale = scale.max(v.abs());
        }
        lu.eliminate(scale);
        Ok(lu)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let start = i.saturating_sub(self.kl);
        debug_assert!(j >= start && j - start < self.width, "({i}, {j}) outside band");
        i * self.width + (j - start)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let o = self.offset(i, j);
        &mut self.data[o]
    }

    fn eliminate(&mut self, scale: f64) {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.pivots[k] = p;
            if scale > 0.0 {
                self.min_pivot_ratio = self.min_pivot_ratio.min(best / scale);
            }
            if best == 0.0 {
                continue;
            }
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.offset(k, j), self.offset(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            let row_k = self.offset(k, k);
            for i in k + 1..=last_row {
                let l = self.at(i, k) / pivot;
                *self.at_mut(i, k) = l;
                if l == 0.0 {
                    continue;
                }
                let row_i = self.offset(i, k);
                let len = last_col - k;
                for t in 1..=len {
                    self.data[row_i + t] -= l * self.data[row_k + t];
                }
            }
        }
    }

    /// Smallest |pivot| relative to the largest matrix entry.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    /// Whether a pivot fell below `tol` relative to the matrix scale.
    pub fn is_singular(&self, tol: f64) -> bool {
        self.min_pivot_ratio < tol
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == 0.0 {
                continue;
            }
            let last_row = (k + self.kl).min(n - 1);
            for i in k + 1..=last_row {
                b[i] -= self.at(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let row = self.offset(k, k);
            let mut s = b[k];
            for t in 1..=(last_col - k) {
                s -= self.data[row + t] * b[k + t];
            }
            b[k] = s / self.data[row];
        }
    }
}
