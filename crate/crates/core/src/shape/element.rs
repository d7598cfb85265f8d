use nalgebra::DMatrix;

use super::poly1d::{h1_1d, legendre};

/// Tensor-product hierarchical H1 basis of order `p`; function `(i, j)` is
/// `a_i(x) a_j(y)` at index `i + (p+1) j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct H1Basis {
    pub p: usize,
}

#[derive(Debug, Clone)]
pub struct H1Eval {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl H1Basis {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "H1 order must be at least 1");
        Self { p }
    }

    pub fn dim(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + (self.p + 1) * j
    }

    pub fn eval(&self, xi: [f64; 2]) -> H1Eval {
        let (ax, dx) = h1_1d(self.p, xi[0]);
        let (ay, dy) = h1_1d(self.p, xi[1]);
        let n = self.dim();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        for j in 0..=self.p {
            for i in 0..=self.p {
                values.push(ax[i] * ay[j]);
                grads.push([dx[i] * ay[j], ax[i] * dy[j]]);
            }
        }
        H1Eval { values, grads }
    }
}

pub fn eval_h1(p: usize, xi: [f64; 2]) -> H1Eval {
    H1Basis::new(p).eval(xi)
}

/// Raviart-Thomas basis of order `p` (dimension `2 p (p+1)`).
///
/// The first `p (p+1)` members are `(a_i(x) P_b(y), 0)` at index
/// `i + (p+1) b`, the rest `(0, P_b(x) a_j(y))` at `p (p+1) + b + p j`,
/// with `a` the 1D hierarchical basis of degree `p` and `P_b` Legendre of
/// degree `b < p`. Only members built on a vertex function `a_0`/`a_1` have
/// a nonzero normal trace, and it lives on a single edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HdivBasis {
    pub p: usize,
}

#[derive(Debug, Clone)]
pub struct HdivEval {
    pub values: Vec<[f64; 2]>,
    pub divs: Vec<f64>,
}

impl HdivBasis {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "H(div) order must be at least 1");
        Self { p }
    }

    pub fn dim(&self) -> usize {
        2 * self.p * (self.p + 1)
    }

    pub fn half(&self) -> usize {
        self.p * (self.p + 1)
    }

    pub fn eval(&self, xi: [f64; 2]) -> HdivEval {
        let p = self.p;
        let (ax, dax) = h1_1d(p, xi[0]);
        let (ay, day) = h1_1d(p, xi[1]);
        let lx = legendre(p - 1, xi[0]);
        let ly = legendre(p - 1, xi[1]);
        let n = self.dim();
        let mut values = Vec::with_capacity(n);
        let mut divs = Vec::with_capacity(n);
        for b in 0..p {
            for i in 0..=p {
                values.push([ax[i] * ly[b], 0.0]);
                divs.push(dax[i] * ly[b]);
            }
        }
        for j in 0..=p {
            for b in 0..p {
                values.push([0.0, lx[b] * ay[j]]);
                divs.push(lx[b] * day[j]);
            }
        }
        HdivEval { values, divs }
    }
}

pub fn eval_hdiv(p: usize, xi: [f64; 2]) -> HdivEval {
    HdivBasis::new(p).eval(xi)
}

/// Tensor Legendre basis up to degree `p` per direction; `(i, j)` at
/// `i + (p+1) j`. Orthogonal under the unit weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct L2Basis {
    pub p: usize,
}

impl L2Basis {
    pub fn new(p: usize) -> Self {
        Self { p }
    }

    pub fn dim(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let lx = legendre(self.p, xi[0]);
        let ly = legendre(self.p, xi[1]);
        let mut v = Vec::with_capacity(self.dim());
        for j in 0..=self.p {
            for i in 0..=self.p {
                v.push(lx[i] * ly[j]);
            }
        }
        v
    }

    /// Exact mass matrix diagonal `int P_i^2 P_j^2`.
    pub fn mass_diagonal(&self) -> Vec<f64> {
        let m = |k: usize| 2.0 / (2 * k + 1) as f64;
        let mut d = Vec::with_capacity(self.dim());
        for j in 0..=self.p {
            for i in 0..=self.p {
                d.push(m(i) * m(j));
            }
        }
        d
    }
}

pub fn eval_l2(p: usize, xi: [f64; 2]) -> Vec<f64> {
    L2Basis::new(p).eval(xi)
}

/// Point on reference edge `edge` at parameter `t`.
pub fn edge_point(edge: usize, t: f64) -> [f64; 2] {
    match edge {
        0 => [t, -1.0],
        1 => [1.0, t],
        2 => [t, 1.0],
        3 => [-1.0, t],
        _ => panic!("edge index {edge} out of range"),
    }
}

pub fn outward_normal(edge: usize) -> [f64; 2] {
    match edge {
        0 => [0.0, -1.0],
        1 => [1.0, 0.0],
        2 => [0.0, 1.0],
        3 => [-1.0, 0.0],
        _ => panic!("edge index {edge} out of range"),
    }
}

/// Maps H1 coefficients to the coefficients of the edge trace in the 1D
/// hierarchical basis `[a_0, a_1, phi_2, .., phi_p]` of the edge parameter.
pub fn edge_trace_h1(p: usize, edge: usize) -> DMatrix<f64> {
    let basis = H1Basis::new(p);
    let mut m = DMatrix::zeros(p + 1, basis.dim());
    for k in 0..=p {
        let col = match edge {
            0 => basis.index(k, 0),
            1 => basis.index(1, k),
            2 => basis.index(k, 1),
            3 => basis.index(0, k),
            _ => panic!("edge index {edge} out of range"),
        };
        m[(k, col)] = 1.0;
    }
    m
}

/// Maps H(div) coefficients to the Legendre coefficients (degree `< p`) of
/// the outward normal trace on `edge`.
pub fn normal_trace_hdiv(p: usize, edge: usize) -> DMatrix<f64> {
    let basis = HdivBasis::new(p);
    let mut m = DMatrix::zeros(p, basis.dim());
    for b in 0..p {
        let (col, sign) = match edge {
            0 => (basis.half() + b, -1.0),
            1 => (1 + (p + 1) * b, 1.0),
            2 => (basis.half() + b + p, 1.0),
            3 => ((p + 1) * b, -1.0),
            _ => panic!("edge index {edge} out of range"),
        };
        m[(b, col)] = sign;
    }
    m
}
