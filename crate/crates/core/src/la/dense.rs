use nalgebra::{DMatrix, DVector};

use super::{LaError, C64};

pub type DMat = DMatrix<C64>;
pub type DVec = DVector<C64>;

const HERMITIAN_TOL: f64 = 1e-12;

/// Dense Hermitian matrix. Construction checks `A = A^H` to a relative
/// Frobenius tolerance of 1e-12.
#[derive(Debug, Clone)]
pub struct HermitianDense {
    mat: DMat,
}

impl HermitianDense {
    pub fn new(mat: DMat) -> Result<Self, LaError> {
        if mat.nrows() != mat.ncols() {
            return Err(LaError::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(LaError::NotHermitian(dev));
        }
        Ok(Self { mat })
    }

    /// Replaces `mat` by `(mat + mat^H) / 2`. Used for matrices that are
    /// Hermitian in exact arithmetic but carry rounding noise.
    pub fn symmetrized(mat: DMat) -> Self {
        let n = mat.nrows();
        assert_eq!(n, mat.ncols(), "symmetrized: matrix must be square");
        let mut out = mat;
        for j in 0..n {
            out[(j, j)] = C64::new(out[(j, j)].re, 0.0);
            for i in (j + 1)..n {
                let v = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Self { mat: out }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMat::identity(n, n),
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut mat = DMat::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            mat[(i, i)] = C64::new(*v, 0.0);
        }
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMat {
        &self.mat
    }

    pub fn into_matrix(self) -> DMat {
        self.mat
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let xj = x[j];
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.mat.column(j);
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
        y
    }
}

/// `||A - A^H||_F / ||A||_F` (0 for the zero matrix).
pub fn hermitian_deviation(a: &DMat) -> f64 {
    let n = a.nrows();
    let mut diff = 0.0;
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            diff += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
            total += a[(i, j)].norm_sqr();
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (diff / total).sqrt()
    }
}

/// Lower-triangular factor `L` with `L L^H = A`, stored row-major.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<C64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        self.l[i * self.n + j]
    }

    pub fn lower(&self) -> DMat {
        DMat::from_fn(self.n, self.n, |i, j| if j <= i { self.at(i, j) } else { C64::new(0.0, 0.0) })
    }

    /// Reassembles `L L^H`.
    pub fn reassemble(&self) -> DMat {
        let l = self.lower();
        &l * l.adjoint()
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: C64 = row.iter().zip(&b[..i]).map(|(l, y)| l * y).sum();
            b[i] = (b[i] - s) / self.l[i * n + i].re;
        }
    }

    /// Solves `L^H x = y` in place.
    pub fn backward_in_place(&self, y: &mut [C64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let xi = y[i] / self.l[i * n + i].re;
            y[i] = xi;
            let row = &self.l[i * n..i * n + i];
            for (k, l) in row.iter().enumerate() {
                y[k] -= l.conj() * xi;
            }
        }
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    /// `L^{-1} B`, column by column.
    pub fn forward_mat(&self, b: &DMat) -> DMat {
        assert_eq!(b.nrows(), self.n);
        let mut out = b.clone();
        let mut buf = vec![C64::new(0.0, 0.0); self.n];
        for j in 0..b.ncols() {
            buf.copy_from_slice(out.column(j).as_slice());
            self.forward_in_place(&mut buf);
            out.column_mut(j).copy_from_slice(&buf);
        }
        out
    }

    /// `A^{-1} B`, column by column.
    pub fn solve_mat(&self, b: &DMat) -> DMat {
        assert_eq!(b.nrows(), self.n);
        let mut out = b.clone();
        let mut buf = vec![C64::new(0.0, 0.0); self.n];
        for j in 0..b.ncols() {
            buf.copy_from_slice(out.column(j).as_slice());
            self.solve_in_place(&mut buf);
            out.column_mut(j).copy_from_slice(&buf);
        }
        out
    }
}

/// Unblocked Cholesky factorization of a Hermitian positive definite matrix.
pub fn hermitian_cholesky(a: &HermitianDense) -> Result<CholeskyFactor, LaError> {
    cholesky_of(a.matrix())
}

/// Factorizes the lower triangle of `a`; the strict upper triangle is not read.
pub(crate) fn cholesky_of(a: &DMat) -> Result<CholeskyFactor, LaError> {
    let n = a.nrows();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            let s: C64 = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
            let v = a[(i, j)] - s;
            if i == j {
                let d = v.re;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(LaError::NotPositiveDefinite(i));
                }
                l[i * n + i] = C64::new(d.sqrt(), 0.0);
            } else {
                l[i * n + j] = v / l[j * n + j].re;
            }
        }
    }
    Ok(CholeskyFactor { n, l })
}

pub fn cholesky_solve(f: &CholeskyFactor, b: &[C64]) -> Result<Vec<C64>, LaError> {
    if b.len() != f.dim() {
        return Err(LaError::DimensionMismatch {
            expected: f.dim(),
            got: b.len(),
        });
    }
    let mut x = b.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}
