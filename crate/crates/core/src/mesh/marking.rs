use std::collections::BTreeSet;

use super::{Element, MeshError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefineKind {
    H,
    P,
}

/// Elements selected for refinement, each with its refinement kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkedSet {
    entries: Vec<(usize, RefineKind)>,
}

impl MarkedSet {
    pub fn new(entries: Vec<(usize, RefineKind)>) -> Result<Self, MeshError> {
        let mut seen = BTreeSet::new();
        for (e, _) in &entries {
            if !seen.insert(*e) {
                return Err(MeshError::DuplicateMark(*e));
            }
        }
        Ok(Self { entries })
    }

    pub fn all(n: usize, kind: RefineKind) -> Self {
        Self {
            entries: (0..n).map(|e| (e, kind)).collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, RefineKind)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, kind: RefineKind) -> usize {
        self.entries.iter().filter(|(_, k)| *k == kind).count()
    }
}

/// Dörfler bulk marking on squared indicators.
pub fn dorfler_mark(eta_sq: &[f64], theta: f64) -> Result<Vec<usize>, MeshError> {
    dorfler_mark_with_exponent(eta_sq, theta, 2.0)
}

/// Dörfler marking on `eta_K^exponent` (with `eta_sq` holding `eta_K^2`):
/// the smallest set, taken in descending order with ties broken by lower
/// element id, whose weights reach `theta` times the total.
pub fn dorfler_mark_with_exponent(eta_sq: &[f64], theta: f64, exponent: f64) -> Result<Vec<usize>, MeshError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(MeshError::InvalidIndicators(format!("theta {theta} not in (0,1)")));
    }
    if eta_sq.iter().any(|v| !(*v >= 0.0)) {
        return Err(MeshError::InvalidIndicators("negative or NaN indicator".into()));
    }
    let w: Vec<f64> = eta_sq.iter().map(|v| v.powf(exponent / 2.0)).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(MeshError::AllZeroIndicators);
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let goal = theta * total;
    let mut acc = 0.0;
    let mut out = Vec::new();
    for i in order {
        out.push(i);
        acc += w[i];
        if acc >= goal {
            break;
        }
    }
    Ok(out)
}

/// True when the element's longest edge is at least half a wavelength,
/// `lambda = 2 pi c / omega` (a relative slack of 1e-12 absorbs rounding).
pub fn wavelength_edge_test(element: &Element, omega: f64, wavespeed: f64) -> bool {
    let lambda = 2.0 * std::f64::consts::PI * wavespeed / omega;
    element.max_edge_length() >= 0.5 * lambda * (1.0 - 1e-12)
}
