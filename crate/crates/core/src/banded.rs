//! Banded matrices and LU factorization with partial pivoting.
//!
//! Row `i` stores columns `i − kl ..= i + kl + ku`; the extra `kl`
//! superdiagonals hold fill-in from row interchanges.

use crate::error::{LabError, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn in_storage(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.kl + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_storage(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Sets entry `(i, j)`; panics outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index ({i}, {j}) out of range");
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }
}

/// In-place LU factors `P A = L U` of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factors `a`. An exactly zero pivot column yields
    /// [`LabError::Singular`] carrying the (0-based) row index.
    pub fn factor(mut a: BandedMatrix) -> Result<Self> {
        let n = a.n;
        let (kl, ku) = (a.kl, a.ku);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LabError::Singular { dof: k.to_string() });
            }
            pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (ik, ip) = (a.idx(k, j), a.idx(p, j));
                    a.data.swap(ik, ip);
                }
            }
            let pivot = a.data[a.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = a.idx(i, k);
                let l = a.data[ik] / pivot;
                a.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = a.data[a.idx(k, j)];
                        let ij = a.idx(i, j);
                        a.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(Self { a, pivots })
    }

    pub fn size(&self) -> usize {
        self.a.n
    }

    /// Solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    b[i] -= a.data[a.idx(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + a.kl + a.ku).min(n - 1) {
                s -= a.data[a.idx(i, j)] * b[j];
            }
            b[i] = s / a.data[a.idx(i, i)];
        }
    }
}
