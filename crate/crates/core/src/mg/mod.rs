//! Multilevel preconditioner for the condensed trace systems of a sequence
//! of nested meshes.
//!
//! Between consecutive meshes the transfer has two stages. Fine DOFs lying
//! strictly inside a coarse element are eliminated coarse element by coarse
//! element, leaving a macro system on the fine DOFs of the coarse skeleton.
//! Coarse trace functions are then written in the macro basis (natural
//! inclusion). Smoothing acts on the macro system with one block per coarse
//! vertex patch.

mod cycle;
mod hierarchy;

use thiserror::Error;

use crate::la::LaError;

pub use cycle::{smooth, solve, v_cycle};
pub use hierarchy::{build_inclusion, macro_condense, GridLevel, Hierarchy, MacroData, MacroGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseOpMode {
    /// Galerkin products of the finer level.
    Restrict,
    /// The system assembled when the coarser mesh was the active one.
    Store,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BottomTreatment {
    /// Smoothing only on the coarsest level.
    None,
    ExactSolve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// Additive Schwarz weight; `None` uses `1 / max patch overlap`.
    pub damping: Option<f64>,
    pub bottom: BottomTreatment,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self { pre_smooth: 1, post_smooth: 1, damping: None, bottom: BottomTreatment::None }
    }
}

impl CycleConfig {
    pub fn symmetric(m: usize) -> Self {
        Self { pre_smooth: m, post_smooth: m, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), MgError> {
        if let Some(w) = self.damping {
            if !(w > 0.0 && w <= 1.0) {
                return Err(MgError::InvalidDamping(w));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MgError {
    #[error("interior block of coarse element {0} is singular")]
    SingularInteriorBlock(usize),
    #[error("no stored system for level {0}")]
    MissingStoredSystem(usize),
    #[error("patch block {0} is not positive definite")]
    PatchNotPositiveDefinite(usize),
    #[error("coarsest level matrix is not positive definite")]
    BottomNotPositiveDefinite,
    #[error("damping {0} outside (0, 1]")]
    InvalidDamping(f64),
    #[error("mesh sequence is not nested at level {0}")]
    NotNested(usize),
    #[error(transparent)]
    Linear(#[from] LaError),
}
