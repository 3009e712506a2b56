//! Coordinate-format operators and a banded LU used for the superoperator
//! solves.

use crate::fock::{CMatrix, CVector, C64};

/// Nonzero entries `(row, col, value)` of a square operator.
#[derive(Clone, Debug, Default)]
pub struct SparseOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        Self::from_dense_filtered(m, |_, _| true)
    }

    pub fn from_dense_filtered(m: &CMatrix, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) && keep(i, j) {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim: m.nrows(), entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out += c·(A ρ)`.
    pub fn left_mul_add(&self, rho: &CMatrix, c: C64, out: &mut CMatrix) {
        let n = rho.ncols();
        for &(i, k, v) in &self.entries {
            let f = c * v;
            for j in 0..n {
                out[(i, j)] += f * rho[(k, j)];
            }
        }
    }

    /// `out += c·(ρ A)`.
    pub fn right_mul_add(&self, rho: &CMatrix, c: C64, out: &mut CMatrix) {
        let n = rho.nrows();
        for &(k, j, v) in &self.entries {
            let f = c * v;
            let src = rho.column(k);
            let mut dst = out.column_mut(j);
            for i in 0..n {
                dst[i] += f * src[i];
            }
        }
    }

    /// `out += A ρ A†`.
    pub fn sandwich_add(&self, rho: &CMatrix, out: &mut CMatrix) {
        for &(i, k, v1) in &self.entries {
            for &(j, l, v2) in &self.entries {
                out[(i, j)] += v1 * rho[(k, l)] * v2.conj();
            }
        }
    }

    /// True when every entry connects levels of equal parity.
    pub fn preserves_parity(&self) -> bool {
        self.entries.iter().all(|&(i, j, _)| (i + j) % 2 == 0)
    }
}

/// Sum duplicate coordinates and drop exact zeros.
pub fn merge_triplets(mut t: Vec<(usize, usize, C64)>) -> Vec<(usize, usize, C64)> {
    t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(t.len());
    for (i, j, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    out.retain(|e| e.2 != C64::new(0.0, 0.0));
    out
}

/// Square banded matrix with room for the fill-in of partial pivoting.
///
/// Row `i` stores columns `i − kl ..= i + kl + ku`.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandedMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in triplets {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let width = 2 * kl + ku + 1;
        let mut m = Self { n, kl, ku, width, data: vec![C64::new(0.0, 0.0); n * width] };
        for &(i, j, v) in triplets {
            *m.at_mut(i, j) += v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        let o = self.offset(i, j);
        &mut self.data[o]
    }

    pub fn add_diagonal(&mut self, shift: C64) {
        for i in 0..self.n {
            *self.at_mut(i, i) += shift;
        }
    }

    /// In-place LU with partial pivoting. Exactly zero pivots are replaced by
    /// `tiny` so inverse iteration on a singular matrix still proceeds.
    pub fn factor(mut self, tiny: f64) -> BandedLu {
        let n = self.n;
        let kl = self.kl;
        let span = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).norm();
            for i in k + 1..=last_row {
                let v = self.at(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            let last_col = (k + span).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.at(k, j);
                    let b = self.at(p, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(p, j) = a;
                }
            }
            if self.at(k, k).norm() == 0.0 {
                *self.at_mut(k, k) = C64::new(tiny, 0.0);
            }
            let pivot = self.at(k, k);
            for i in k + 1..=last_row {
                let factor = self.at(i, k) / pivot;
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                *self.at_mut(i, k) = factor;
                for j in k + 1..=last_col {
                    let akj = self.at(k, j);
                    if akj != C64::new(0.0, 0.0) {
                        *self.at_mut(i, j) -= factor * akj;
                    }
                }
            }
        }
        BandedLu { m: self, pivots }
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.m.n;
        let kl = self.m.kl;
        let span = self.m.kl + self.m.ku;
        let mut x = b.clone();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap_rows(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                let f = self.m.at(i, k);
                x[i] -= f * xk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..=(i + span).min(n - 1) {
                acc -= self.m.at(i, j) * x[j];
            }
            x[i] = acc / self.m.at(i, i);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn banded_solve_matches_dense() {
        let n: usize = 40;
        let mut trip = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 5).min(n) {
                let v = c(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64 - 2.0);
                trip.push((i, j, v));
            }
        }
        let dense = CMatrix::from_fn(n, n, |i, j| {
            trip.iter().filter(|t| t.0 == i && t.1 == j).map(|t| t.2).sum::<C64>()
        });
        let b = CVector::from_fn(n, |i, _| c(i as f64, 1.0));
        let x = BandedMatrix::from_triplets(n, &trip).factor(1e-300).solve(&b);
        let r = &dense * &x - &b;
        assert!(r.camax() < 1e-9, "residual {}", r.camax());
    }

    #[test]
    fn sparse_products_match_dense() {
        let m = CMatrix::from_fn(5, 5, |i, j| if (i + j) % 3 == 0 { c(i as f64 + 1.0, j as f64) } else { c(0.0, 0.0) });
        let rho = CMatrix::from_fn(5, 5, |i, j| c((i * j) as f64, i as f64 - j as f64));
        let s = SparseOp::from_dense(&m);
        let mut out = CMatrix::zeros(5, 5);
        s.left_mul_add(&rho, c(1.0, 0.0), &mut out);
        assert!((&out - &m * &rho).camax() < 1e-12);
        let mut out = CMatrix::zeros(5, 5);
        s.right_mul_add(&rho, c(0.0, 2.0), &mut out);
        assert!((&out - &rho * &m * c(0.0, 2.0)).camax() < 1e-12);
        let mut out = CMatrix::zeros(5, 5);
        s.sandwich_add(&rho, &mut out);
        assert!((&out - &m * &rho * m.adjoint()).camax() < 1e-10);
    }

    #[test]
    fn merge_sums_duplicates() {
        let t = merge_triplets(vec![(1, 1, c(1.0, 0.0)), (0, 2, c(2.0, 0.0)), (1, 1, c(-1.0, 0.0)), (0, 2, c(1.0, 1.0))]);
        assert_eq!(t, vec![(0, 2, c(3.0, 1.0))]);
    }
}
