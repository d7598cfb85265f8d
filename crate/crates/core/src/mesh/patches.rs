use std::collections::BTreeMap;

use super::{Mesh, VertexKey};

/// Smoothing block attached to a vertex of the coarse mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPatch {
    pub anchor: VertexKey,
    /// Coarse elements whose closure contains the anchor.
    pub elements: Vec<usize>,
    /// Sorted, deduplicated DOF indices.
    pub dof_set: Vec<usize>,
}

/// One patch per vertex of `coarse`. `element_dofs[e]` lists the DOFs
/// supported on the closure of coarse element `e`. A DOF joins the patch of
/// `v` when every element it touches lies around `v`; a DOF touching elements
/// without a common vertex joins the patches covering most of them.
pub fn vertex_patches(coarse: &Mesh, element_dofs: &[Vec<usize>]) -> Vec<VertexPatch> {
    assert_eq!(element_dofs.len(), coarse.num_elements());
    let mut around: BTreeMap<VertexKey, Vec<usize>> = BTreeMap::new();
    for (id, e) in coarse.elements().iter().enumerate() {
        for &v in coarse.vertices().keys() {
            if e.contains_closed(v) && e.locate_on_boundary(v).is_some() {
                around.entry(v).or_default().push(id);
            }
        }
    }
    let mut touching: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (e, dofs) in element_dofs.iter().enumerate() {
        for &d in dofs {
            touching.entry(d).or_default().push(e);
        }
    }
    let stars: Vec<(VertexKey, Vec<usize>)> = around.into_iter().collect();
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); stars.len()];
    for (&d, elems) in &touching {
        let overlap: Vec<usize> =
            stars.iter().map(|(_, star)| elems.iter().filter(|e| star.binary_search(e).is_ok()).count()).collect();
        let best = *overlap.iter().max().unwrap();
        for (i, &c) in overlap.iter().enumerate() {
            if c == best && (c == elems.len() || best < elems.len()) {
                sets[i].push(d);
            }
        }
    }
    stars
        .into_iter()
        .zip(sets)
        .map(|((anchor, elements), dof_set)| VertexPatch { anchor, elements, dof_set })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_patches_cover_everything() {
        let m = Mesh::initial(2, 5).unwrap();
        let p = vertex_patches(&m, &[vec![0, 1, 2, 3, 4]]);
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|p| p.dof_set == vec![0, 1, 2, 3, 4]));
    }

    #[test]
    fn two_by_two_center_patch() {
        let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
        let dofs: Vec<Vec<usize>> = (0..4).map(|e| vec![e, 10 + e]).collect();
        let p = vertex_patches(&m, &dofs);
        assert_eq!(p.len(), 9);
        let center = p.iter().find(|p| p.elements.len() == 4).unwrap();
        assert_eq!(center.dof_set, vec![0, 1, 2, 3, 10, 11, 12, 13]);
        assert_eq!(p.iter().filter(|p| p.elements.len() == 1).count(), 4);
    }

    #[test]
    fn shared_dofs_join_only_patches_containing_their_support() {
        let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
        // dof 7 touches every element, dof 8 only the first two
        let dofs: Vec<Vec<usize>> = (0..4).map(|e| if e < 2 { vec![e, 7, 8] } else { vec![e, 7] }).collect();
        let p = vertex_patches(&m, &dofs);
        let with = |d: usize| p.iter().filter(|q| q.dof_set.contains(&d)).count();
        assert_eq!(with(7), 1);
        assert_eq!(with(8), 2);
        assert_eq!(with(0), 4);
    }
}
