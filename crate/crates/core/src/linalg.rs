//! Compressed sparse row matrices over ℂ, just enough for representation
//! matrices, commutators and Krylov iterations.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: vec![],
            values: vec![],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != C64::new(0.0, 0.0)).collect();
        let mut ri = Vec::new();
        let mut ci = Vec::new();
        let mut vi = Vec::new();
        for k in 0..values.len() {
            if keep[k] {
                ri.push(rows[k]);
                ci.push(indices[k]);
                vi.push(values[k]);
            }
        }
        for &r in &ri {
            indptr[r + 1] += 1;
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices: ci,
            values: vi,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k])))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        for k in self.indptr[r]..self.indptr[r + 1] {
            if self.indices[k] == c {
                return self.values[k];
            }
        }
        C64::new(0.0, 0.0)
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.nrows {
            let mut s = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            y[r] = s;
        }
    }

    /// y = A* x.
    pub fn adjoint_matvec(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for r in 0..self.nrows {
            let xr = x[r];
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k].conj() * xr;
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let m = self.indices[k];
                let a = self.values[k];
                for l in other.indptr[m]..other.indptr[m + 1] {
                    t.push((r, other.indices[l], a * other.values[l]));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, t)
    }

    /// Keeps the rows and columns listed (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut cmap = vec![usize::MAX; self.ncols];
        for (j, &c) in cols.iter().enumerate() {
            cmap[c] = j;
        }
        let mut t = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let j = cmap[self.indices[k]];
                if j != usize::MAX {
                    t.push((i, j, self.values[k]));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), t)
    }

    /// A ⊗ B for a small dense B (used to attach the Clifford factor).
    pub fn kron_dense(&self, b: &[[C64; 2]; 2]) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz() * 4);
        for (r, c, v) in self.triplets() {
            for i in 0..2 {
                for j in 0..2 {
                    t.push((2 * r + i, 2 * c + j, v * b[i][j]));
                }
            }
        }
        CsrMatrix::from_triplets(2 * self.nrows, 2 * self.ncols, t)
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max column sum of moduli.
    pub fn norm_one(&self) -> f64 {
        let mut col = vec![0.0; self.ncols];
        for (_, c, v) in self.triplets() {
            col[c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Max row sum of moduli.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| (self.indptr[r]..self.indptr[r + 1]).map(|k| self.values[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// At most one nonzero in every row and every column.
    pub fn is_monomial(&self) -> bool {
        let mut seen = vec![false; self.ncols];
        for r in 0..self.nrows {
            if self.indptr[r + 1] - self.indptr[r] > 1 {
                return false;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                if seen[self.indices[k]] {
                    return false;
                }
                seen[self.indices[k]] = true;
            }
        }
        true
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.nrows, self.ncols, C64::new(0.0, 0.0));
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> CsrMatrix {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != C64::new(0.0, 0.0) {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), m.ncols(), t)
    }
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (0, 1, c(-1.0)), (1, 0, c(2.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(2.0));
    }

    #[test]
    fn products_match_dense() {
        let a = CsrMatrix::from_triplets(3, 2, vec![(0, 0, c(1.0)), (2, 1, C64::new(0.0, 2.0)), (1, 1, c(3.0))]);
        let b = CsrMatrix::from_triplets(2, 3, vec![(0, 2, c(4.0)), (1, 0, c(-1.0))]);
        assert_eq!(a.mul(&b).to_dense(), a.to_dense() * b.to_dense());
        assert_eq!(a.adjoint().to_dense(), a.to_dense().adjoint());
        let x = vec![c(1.0), C64::new(0.5, -1.0), c(2.0)];
        let mut y = vec![c(0.0); 2];
        a.adjoint_matvec(&x, &mut y);
        assert_eq!(y, a.adjoint().apply(&x));
    }

    #[test]
    fn monomial_detection() {
        assert!(CsrMatrix::identity(4).is_monomial());
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, c(1.0)), (1, 0, c(1.0))]);
        assert!(!m.is_monomial());
    }
}
