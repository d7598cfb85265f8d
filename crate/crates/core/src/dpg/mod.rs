//! Ultraweak DPG discretization of `i w p + div u = 0`, `i w u + grad p = 0`
//! on the unit square with impedance data `Z^{-1} p - u.n = u_0`.
//!
//! Each element of order `p` carries field unknowns of degree `p - 1` per
//! direction, a continuous trace of degree `p` and a normal-flux trace of
//! degree `p - 1` per edge. Tests are broken `H1 x H(div)` functions of order
//! `p + delta_p`. On boundary edges the flux is replaced by `Z^{-1} p_hat - u_0`,
//! so boundary edges carry only the continuous trace.

mod assembly;
mod element;
mod layout;
mod load;

use thiserror::Error;

pub use assembly::{
    assemble_global, assemble_operators, element_operator, error_indicators, field_l2_error, global_residual_sq,
    recover_fields, trace_at, AssembledSystem, ElementOperator, FieldSolution,
};
pub use element::{
    condense, element_forms, element_gram, element_system, field_dim, test_dim, Condensed, ElementGeometry,
    ElementSystem, Recovery,
};
pub use layout::{DofEntity, DofLayout, LocalLayout, SparseRow, SIDE_CORNERS};
pub use load::{plane_wave, BoundaryLoad, FieldValue, GaussianBeam};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpgError {
    #[error("element Gram matrix is not positive definite")]
    GramNotPositiveDefinite,
    #[error("field block is singular; trial and test orders are incompatible")]
    SingularFieldBlock,
    #[error("invalid problem parameter: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    /// Angular frequency.
    pub omega: f64,
    /// Impedance `Z`.
    pub impedance: f64,
    /// Weight of the L2 term in the test norm.
    pub alpha: f64,
    /// Test order enrichment.
    pub delta_p: usize,
    pub wavespeed: f64,
    pub load: BoundaryLoad,
}

impl ProblemConfig {
    pub fn new(omega: f64) -> Self {
        Self { omega, impedance: 1.0, alpha: 1.0, delta_p: 1, wavespeed: 1.0, load: BoundaryLoad::None }
    }

    pub fn with_load(mut self, load: BoundaryLoad) -> Self {
        self.load = load;
        self
    }

    pub fn wavenumber(&self) -> f64 {
        self.omega / self.wavespeed
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavenumber()
    }

    pub fn validate(&self) -> Result<(), DpgError> {
        let bad = |s: &str| Err(DpgError::InvalidConfig(s.to_string()));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad("omega");
        }
        if !(self.impedance > 0.0 && self.impedance.is_finite()) {
            return bad("impedance");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha");
        }
        if self.delta_p < 1 {
            return bad("delta_p");
        }
        if !(self.wavespeed > 0.0 && self.wavespeed.is_finite()) {
            return bad("wavespeed");
        }
        Ok(())
    }
}
