//! Ultraweak DPG discretization of the 2D first-order Helmholtz system with
//! impedance boundary conditions, and a multigrid-preconditioned conjugate
//! gradient solver acting on the statically condensed trace system.

// index loops mirror the tensor-product formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dpg;
pub mod driver;
pub mod io;
pub mod la;
pub mod mesh;
pub mod mg;
pub mod shape;
