//! Exact-sequence shape functions on the reference square [-1, 1]^2.
//!
//! Orders follow the H1 -> H(div) -> L2 sequence: `H1Basis(p)` is `Q_p`,
//! `HdivBasis(p)` is the Raviart-Thomas space `Q_{p,p-1} x Q_{p-1,p}`, and
//! its divergence lands in `L2Basis(p-1)`. On an edge of order `p` the H1
//! trace has degree `p` and the normal trace has degree `p-1`.
//!
//! Reference edges are numbered 0 bottom (y=-1), 1 right (x=1), 2 top (y=1),
//! 3 left (x=-1), each parametrized along increasing x or y.

mod constraint;
mod element;
pub mod poly1d;

pub use constraint::{constraint_coeffs, ConstraintCoeffs};
pub use element::{
    edge_point, edge_trace_h1, eval_h1, eval_hdiv, eval_l2, normal_trace_hdiv, outward_normal,
    H1Basis, H1Eval, HdivBasis, HdivEval, L2Basis,
};
