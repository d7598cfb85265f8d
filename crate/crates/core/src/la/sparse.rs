use rayon::prelude::*;

use super::dense::{hermitian_deviation, DMat};
use super::{LaError, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from coordinate triplets; duplicates are summed in input order,
    /// so the result is independent of how triplets were grouped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<C64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn from_dense(d: &DMat) -> Self {
        let mut trips = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != ZERO {
                    trips.push((i, j, d[(i, j)]));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), trips)
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => ZERO,
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let body = |(i, yi): (usize, &mut C64)| {
            let r = self.indptr[i]..self.indptr[i + 1];
            *yi = self.indices[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(j, v)| v * x[*j])
                .sum();
        };
        if self.nnz() > 200_000 {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = A^H x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![ZERO; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for (j, v) in self.row(i) {
                y[j] += v.conj() * xi;
            }
        }
        y
    }

    pub fn adjoint(&self) -> CsrMatrix {
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trips.push((j, i, v.conj()));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, trips)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix, LaError> {
        if self.ncols != other.nrows {
            return Err(LaError::DimensionMismatch {
                expected: self.ncols,
                got: other.nrows,
            });
        }
        let mut trips = Vec::new();
        let mut acc = vec![ZERO; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = ZERO;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                trips.push((i, j, acc[j]));
            }
        }
        Ok(CsrMatrix::from_triplets(self.nrows, other.ncols, trips))
    }

    pub fn to_dense(&self) -> DMat {
        let mut d = DMat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Dense principal submatrix on the index set `idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DMat {
        let mut pos = std::collections::HashMap::with_capacity(idx.len());
        for (k, &g) in idx.iter().enumerate() {
            pos.insert(g, k);
        }
        let mut d = DMat::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                if let Some(&b) = pos.get(&j) {
                    d[(a, b)] = v;
                }
            }
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||self - other||_F`.
    pub fn frobenius_distance(&self, other: &CsrMatrix) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut s = 0.0;
        for i in 0..self.nrows {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        s += (va - vb).norm_sqr();
                        a.next();
                        b.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        s += va.norm_sqr();
                        a.next();
                    }
                    (Some(_), Some((_, vb))) | (None, Some((_, vb))) => {
                        s += vb.norm_sqr();
                        b.next();
                    }
                    (Some((_, va)), None) => {
                        s += va.norm_sqr();
                        a.next();
                    }
                }
            }
        }
        s.sqrt()
    }
}

/// Square sparse matrix that is Hermitian (checked at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    csr: CsrMatrix,
}

impl SparseHermitian {
    pub fn new(csr: CsrMatrix) -> Result<Self, LaError> {
        if csr.nrows != csr.ncols {
            return Err(LaError::DimensionMismatch {
                expected: csr.nrows,
                got: csr.ncols,
            });
        }
        let dev = csr.frobenius_distance(&csr.adjoint());
        let norm = csr.frobenius_norm();
        if norm > 0.0 && dev > 1e-12 * norm {
            return Err(LaError::NotHermitian(dev / norm));
        }
        Ok(Self { csr })
    }

    /// Averages with the conjugate transpose.
    pub fn symmetrized(csr: CsrMatrix) -> Self {
        assert_eq!(csr.nrows, csr.ncols);
        let adj = csr.adjoint();
        let mut trips = Vec::with_capacity(2 * csr.nnz());
        for m in [&csr, &adj] {
            for i in 0..m.nrows {
                for (j, v) in m.row(i) {
                    trips.push((i, j, v * 0.5));
                }
            }
        }
        Self {
            csr: CsrMatrix::from_triplets(csr.nrows, csr.ncols, trips),
        }
    }

    pub fn dim(&self) -> usize {
        self.csr.nrows
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        self.csr.mul_vec(x)
    }

    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        self.csr.mul_vec_into(x, y)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.csr.to_dense())
    }
}

/// `P^H A P`, symmetrized.
pub fn triple_product(p: &CsrMatrix, a: &SparseHermitian) -> Result<SparseHermitian, LaError> {
    if p.nrows() != a.dim() {
        return Err(LaError::DimensionMismatch {
            expected: a.dim(),
            got: p.nrows(),
        });
    }
    let ap = a.csr().matmul(p)?;
    let pap = p.adjoint().matmul(&ap)?;
    Ok(SparseHermitian::symmetrized(pap))
}
