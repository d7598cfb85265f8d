//! Complex dense and sparse kernels shared by element assembly and the
//! multilevel solver.

mod dense;
mod pcg;
mod sparse;

pub use dense::{
    cholesky_solve, hermitian_cholesky, hermitian_deviation, CholeskyFactor, DMat, DVec, HermitianDense,
};
pub(crate) use dense::cholesky_of;
pub use pcg::{pcg, PcgOptions, PcgOutcome};
pub use sparse::{triple_product, CsrMatrix, SparseHermitian};

pub use num_complex::Complex64 as C64;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaError {
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),
    #[error("conjugate gradient breakdown: non-positive curvature {0:e} at iteration {1}")]
    BreakdownNonpositiveCurvature(f64, usize),
}

/// Hermitian inner product `sum conj(x_i) y_i`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
