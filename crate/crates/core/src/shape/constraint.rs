use nalgebra::DMatrix;

use super::poly1d::{bubble_restriction, h1_1d, legendre_restriction};

/// Parent-to-child coefficients for an edge of order `p` bisected at its
/// midpoint. Child 0 covers `[-1, 0]` of the parent parameter, child 1
/// covers `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ConstraintCoeffs {
    pub p: usize,
    /// `(p+1) x (p+1)`: row = child H1 trace basis function
    /// `[a_0, a_1, phi_2..phi_p]`, column = parent basis function.
    pub h1: [DMatrix<f64>; 2],
    /// `p x p`: row = child Legendre mode, column = parent Legendre mode of
    /// the normal trace.
    pub flux: [DMatrix<f64>; 2],
}

pub fn constraint_coeffs(p: usize) -> ConstraintCoeffs {
    assert!(p >= 1);
    let halves = [(-1.0, 0.0), (0.0, 1.0)];
    let h1 = halves.map(|(a, b)| {
        let mut m = DMatrix::zeros(p + 1, p + 1);
        let (va, _) = h1_1d(p, a);
        let (vb, _) = h1_1d(p, b);
        for k in 0..=p {
            m[(0, k)] = va[k];
            m[(1, k)] = vb[k];
        }
        let t = bubble_restriction(p, p, a, b);
        for i in 0..p - 1 {
            for k in 0..p - 1 {
                m[(i + 2, k + 2)] = t[(i, k)];
            }
        }
        m
    });
    let flux = halves.map(|(a, b)| legendre_restriction(p, a, b));
    ConstraintCoeffs { p, h1, flux }
}

impl ConstraintCoeffs {
    /// Child coefficients of the parent H1 trace with coefficients `parent`.
    pub fn restrict_h1(&self, child: usize, parent: &[f64]) -> Vec<f64> {
        (0..=self.p)
            .map(|i| (0..=self.p).map(|k| self.h1[child][(i, k)] * parent[k]).sum())
            .collect()
    }
}
