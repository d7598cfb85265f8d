use std::collections::HashMap;

use rayon::prelude::*;

use super::{BottomTreatment, CoarseOpMode, CycleConfig, MgError};
use crate::dpg::{assemble_operators, DofEntity, DofLayout, ElementOperator};
use crate::la::{cholesky_of, CholeskyFactor, CsrMatrix, DMat, SparseHermitian, C64};
use crate::mesh::{vertex_patches, EdgeKey, Mesh, VertexKey, COORD_BITS};
use crate::shape::poly1d::{bubble_restriction, h1_1d, legendre_restriction};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Fine DOFs of one coarse element: those strictly inside are eliminated,
/// those on its boundary become macro DOFs.
#[derive(Debug, Clone)]
pub struct MacroGroup {
    pub coarse_element: usize,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// Positions of `boundary` in the macro numbering.
    pub boundary_macro: Vec<usize>,
    interior_factor: Option<CholeskyFactor>,
    /// `A_bi`, boundary x interior.
    coupling: DMat,
    /// Local Schur complement on `boundary`.
    pub schur: DMat,
}

impl MacroGroup {
    /// `A_ii^{-1} v` for a vector over the interior DOFs.
    fn interior_solve(&self, v: &mut [C64]) {
        if let Some(f) = &self.interior_factor {
            f.solve_in_place(v);
        }
    }
}

/// Result of eliminating the fine DOFs interior to coarse elements.
#[derive(Debug, Clone)]
pub struct MacroData {
    pub groups: Vec<MacroGroup>,
    /// Fine DOFs on the coarse skeleton, ascending.
    pub macro_dofs: Vec<usize>,
    pub schur: SparseHermitian,
}

impl MacroData {
    pub fn num_macro(&self) -> usize {
        self.macro_dofs.len()
    }
}

fn doubled(v: VertexKey) -> (u64, u64) {
    (2 * v.0 as u64, 2 * v.1 as u64)
}

/// Coarse element whose open interior contains the point, if any.
fn interior_owner(coarse: &Mesh, v: VertexKey) -> Option<usize> {
    let (x, y) = doubled(v);
    let e = coarse.element_containing_doubled(x, y);
    coarse.element(e).contains_interior(v).then_some(e)
}

/// Static condensation of the fine DOFs lying inside coarse elements.
/// `fine_ops` are the element contributions of the fine system.
pub fn macro_condense(
    fine: &Mesh,
    fine_layout: &DofLayout,
    fine_ops: &[ElementOperator],
    coarse: &Mesh,
    level: usize,
) -> Result<MacroData, MgError> {
    let owner: Vec<Option<usize>> = fine_layout.entities().iter().map(|e| interior_owner(coarse, e.anchor())).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); coarse.num_elements()];
    for (id, el) in fine.elements().iter().enumerate() {
        let c = coarse.ancestor_element(fine, el.node).ok_or(MgError::NotNested(level))?;
        members[c].push(id);
    }
    let mut macro_dofs: Vec<usize> = (0..owner.len()).filter(|&d| owner[d].is_none()).collect();
    macro_dofs.sort_unstable();
    let mut macro_index = vec![usize::MAX; owner.len()];
    for (i, &d) in macro_dofs.iter().enumerate() {
        macro_index[d] = i;
    }

    let groups: Vec<MacroGroup> = members
        .par_iter()
        .enumerate()
        .map(|(c, elems)| {
            let mut dofs: Vec<usize> = elems.iter().flat_map(|&e| fine_ops[e].dofs.iter().copied()).collect();
            dofs.sort_unstable();
            dofs.dedup();
            let pos: HashMap<usize, usize> = dofs.iter().enumerate().map(|(i, d)| (*d, i)).collect();
            let n = dofs.len();
            let mut a = DMat::zeros(n, n);
            for &e in elems {
                let op = &fine_ops[e];
                let idx: Vec<usize> = op.dofs.iter().map(|d| pos[d]).collect();
                for (i, &gi) in idx.iter().enumerate() {
                    for (j, &gj) in idx.iter().enumerate() {
                        a[(gi, gj)] += op.mat[(i, j)];
                    }
                }
            }
            let mut interior = Vec::new();
            let mut boundary = Vec::new();
            let (mut li, mut lb) = (Vec::new(), Vec::new());
            for (i, &d) in dofs.iter().enumerate() {
                match owner[d] {
                    Some(o) if o == c => {
                        interior.push(d);
                        li.push(i);
                    }
                    Some(_) => return Err(MgError::NotNested(level)),
                    None => {
                        boundary.push(d);
                        lb.push(i);
                    }
                }
            }
            let abb = a.select_rows(&lb).select_columns(&lb);
            let (interior_factor, coupling, schur) = if li.is_empty() {
                (None, DMat::zeros(lb.len(), 0), abb)
            } else {
                let aii = a.select_rows(&li).select_columns(&li);
                let abi = a.select_rows(&lb).select_columns(&li);
                let f = cholesky_of(&aii).map_err(|_| MgError::SingularInteriorBlock(c))?;
                let x = f.solve_mat(&abi.adjoint());
                let s = &abb - &abi * x;
                let s = (&s + s.adjoint()) * C64::new(0.5, 0.0);
                (Some(f), abi, s)
            };
            let boundary_macro = boundary.iter().map(|d| macro_index[*d]).collect();
            Ok(MacroGroup { coarse_element: c, interior, boundary, boundary_macro, interior_factor, coupling, schur })
        })
        .collect::<Result<_, _>>()?;

    let ops: Vec<ElementOperator> = groups
        .iter()
        .map(|g| ElementOperator { dofs: g.boundary_macro.clone(), mat: g.schur.clone(), rhs: vec![ZERO; g.boundary.len()] })
        .collect();
    let (schur, _) = assemble_operators(macro_dofs.len(), &ops);
    Ok(MacroData { groups, macro_dofs, schur })
}

/// Sparse combination of coarse DOFs, keyed by coarse DOF.
type Row = Vec<(usize, f64)>;

fn add_scaled(acc: &mut Row, row: &[(usize, f64)], c: f64) {
    if c != 0.0 {
        acc.extend(row.iter().map(|(d, v)| (*d, c * v)));
    }
}

fn finish(mut row: Row) -> Row {
    row.sort_by_key(|(d, _)| *d);
    let mut out: Row = Vec::with_capacity(row.len());
    for (d, v) in row {
        match out.last_mut() {
            Some((ld, lv)) if *ld == d => *lv += v,
            _ => out.push((d, v)),
        }
    }
    out.retain(|(_, v)| v.abs() > 1e-15);
    out
}

/// Coarse element with `v` on its boundary.
fn element_at_vertex(coarse: &Mesh, v: VertexKey) -> usize {
    let top = 2u64 << COORD_BITS;
    let (x, y) = doubled(v);
    for (dx, dy) in [(1i64, 1i64), (-1, 1), (1, -1), (-1, -1)] {
        let (px, py) = (x as i64 + dx, y as i64 + dy);
        if px > 0 && py > 0 && (px as u64) < top && (py as u64) < top {
            return coarse.element_containing_doubled(px as u64, py as u64);
        }
    }
    unreachable!("vertex outside the domain")
}

/// Coarse element and side containing the segment `e`. Across a hanging
/// node only the larger neighbour has a side containing `e`.
fn element_at_edge(coarse: &Mesh, e: &EdgeKey) -> (usize, usize) {
    let top = 2u64 << COORD_BITS;
    let (mx, my) = doubled(e.midpoint());
    let probes = if e.is_horizontal() {
        [(mx, my.wrapping_add(1)), (mx, my.wrapping_sub(1))]
    } else {
        [(mx.wrapping_add(1), my), (mx.wrapping_sub(1), my)]
    };
    probes
        .into_iter()
        .filter(|&(px, py)| px > 0 && py > 0 && px < top && py < top)
        .find_map(|(px, py)| {
            let c = coarse.element_containing_doubled(px, py);
            coarse.element(c).sides.iter().position(|s| s.key.contains(e)).map(|s| (c, s))
        })
        .expect("fine edge is not on the coarse skeleton")
}

/// Natural inclusion: rows over the macro DOFs, columns over the coarse
/// DOFs. Each row gives the fine coefficient reproducing the coarse trace.
pub fn build_inclusion(coarse: &Mesh, coarse_layout: &DofLayout, fine_layout: &DofLayout, macro_dofs: &[usize]) -> CsrMatrix {
    let rows: Vec<Row> = macro_dofs
        .par_iter()
        .map(|&d| {
            let mut acc = Row::new();
            match fine_layout.entity(d) {
                DofEntity::Vertex(v) => {
                    let c = element_at_vertex(coarse, v);
                    let el = coarse.element(c);
                    let (s, t) = el.locate_on_boundary(v).expect("vertex not on the element boundary");
                    let local = coarse_layout.local(c);
                    let crow = coarse_layout.rows(c);
                    let p = local.side_orders[s];
                    let (vals, _) = h1_1d(p, t);
                    let (a, b) = crate::dpg::SIDE_CORNERS[s];
                    add_scaled(&mut acc, &crow[a], vals[0]);
                    add_scaled(&mut acc, &crow[b], vals[1]);
                    for k in 2..=p {
                        add_scaled(&mut acc, &crow[local.bubble(s, k)], vals[k]);
                    }
                }
                DofEntity::Bubble(e, k) => {
                    let (c, s) = element_at_edge(coarse, &e);
                    let el = coarse.element(c);
                    let (a, b) = el.sides[s].key.sub_range(&e);
                    let local = coarse_layout.local(c);
                    let crow = coarse_layout.rows(c);
                    let ps = local.side_orders[s];
                    let pe = fine_layout.edge_order(&e).unwrap();
                    let t = bubble_restriction(ps, pe, a, b);
                    for j in 2..=ps {
                        add_scaled(&mut acc, &crow[local.bubble(s, j)], t[(k - 2, j - 2)]);
                    }
                }
                DofEntity::Flux(e, m) => {
                    let (c, s) = element_at_edge(coarse, &e);
                    let el = coarse.element(c);
                    let (a, b) = el.sides[s].key.sub_range(&e);
                    let local = coarse_layout.local(c);
                    let crow = coarse_layout.rows(c);
                    let ps = local.side_orders[s];
                    let pe = fine_layout.edge_order(&e).unwrap();
                    let r = legendre_restriction(pe.max(ps), a, b);
                    for j in 0..ps {
                        add_scaled(&mut acc, &crow[local.flux(s, j).expect("flux on a boundary side")], r[(m, j)]);
                    }
                }
            }
            finish(acc)
        })
        .collect();
    let mut trips = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row {
            trips.push((i, *j, C64::new(*v, 0.0)));
        }
    }
    CsrMatrix::from_triplets(macro_dofs.len(), coarse_layout.num_dofs(), trips)
}

#[derive(Debug, Clone)]
pub(crate) struct Patch {
    pub dofs: Vec<usize>,
    pub factor: CholeskyFactor,
}

/// One level of the hierarchy. Level 0 is the initial mesh.
#[derive(Debug, Clone)]
pub struct GridLevel {
    pub mesh: Mesh,
    pub layout: DofLayout,
    pub operators: Vec<ElementOperator>,
    pub matrix: SparseHermitian,
    /// Condensation onto the skeleton of the next coarser mesh.
    pub macro_data: Option<MacroData>,
    /// Macro DOFs x coarser-level DOFs.
    pub inclusion: Option<CsrMatrix>,
    pub(crate) patches: Vec<Patch>,
    pub damping: f64,
    pub(crate) bottom_factor: Option<CholeskyFactor>,
}

impl GridLevel {
    pub fn dim(&self) -> usize {
        self.layout.num_dofs()
    }

    /// The matrix the smoother acts on.
    pub fn smoothing_matrix(&self) -> &SparseHermitian {
        self.macro_data.as_ref().map(|m| &m.schur).unwrap_or(&self.matrix)
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn patch_dofs(&self, i: usize) -> &[usize] {
        &self.patches[i].dofs
    }

    /// Lower Cholesky factor of patch `i`.
    pub fn patch_factor(&self, i: usize) -> &CholeskyFactor {
        &self.patches[i].factor
    }

    /// Fine vector from macro values: harmonic extension into the
    /// eliminated DOFs.
    pub fn extend(&self, xm: &[C64]) -> Vec<C64> {
        let md = self.macro_data.as_ref().expect("level has no coarser level");
        let mut x = vec![ZERO; self.dim()];
        for (i, &d) in md.macro_dofs.iter().enumerate() {
            x[d] = xm[i];
        }
        for g in &md.groups {
            if g.interior.is_empty() {
                continue;
            }
            let xb: Vec<C64> = g.boundary_macro.iter().map(|&i| xm[i]).collect();
            let mut xi = mul_adjoint(&g.coupling, &xb);
            g.interior_solve(&mut xi);
            for (k, &d) in g.interior.iter().enumerate() {
                x[d] = -xi[k];
            }
        }
        x
    }

    /// Two-stage prolongation of a coarser-level vector.
    pub fn prolongate(&self, xc: &[C64]) -> Vec<C64> {
        let xm = self.inclusion.as_ref().expect("level has no coarser level").mul_vec(xc);
        self.extend(&xm)
    }

    /// The two-stage prolongation as a sparse matrix (fine x coarse).
    pub fn transfer_matrix(&self) -> CsrMatrix {
        let inc = self.inclusion.as_ref().expect("level has no coarser level");
        let md = self.macro_data.as_ref().unwrap();
        let mut trips = Vec::new();
        for (i, &d) in md.macro_dofs.iter().enumerate() {
            for (j, v) in inc.row(i) {
                trips.push((d, j, v));
            }
        }
        for g in &md.groups {
            if g.interior.is_empty() {
                continue;
            }
            let (cols, ib) = dense_rows(inc, &g.boundary_macro);
            let mut x = g.coupling.adjoint() * ib;
            if let Some(f) = &g.interior_factor {
                x = f.solve_mat(&x);
            }
            for (r, &d) in g.interior.iter().enumerate() {
                for (c, &j) in cols.iter().enumerate() {
                    if x[(r, c)] != ZERO {
                        trips.push((d, j, -x[(r, c)]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.dim(), inc.ncols(), trips)
    }

    /// Condensed residual `r_b - A_bi A_ii^{-1} r_i` and the interior solves.
    pub(crate) fn condense_residual(&self, r: &[C64]) -> (Vec<C64>, Vec<Vec<C64>>) {
        let md = self.macro_data.as_ref().unwrap();
        let mut rm: Vec<C64> = md.macro_dofs.iter().map(|&d| r[d]).collect();
        let solved: Vec<Vec<C64>> = md
            .groups
            .par_iter()
            .map(|g| {
                let mut y: Vec<C64> = g.interior.iter().map(|&d| r[d]).collect();
                g.interior_solve(&mut y);
                y
            })
            .collect();
        for (g, y) in md.groups.iter().zip(&solved) {
            if g.interior.is_empty() {
                continue;
            }
            let t = &g.coupling * nalgebra::DVector::from_column_slice(y);
            for (k, &i) in g.boundary_macro.iter().enumerate() {
                rm[i] -= t[k];
            }
        }
        (rm, solved)
    }

    /// Back substitution `x_i = A_ii^{-1} (r_i - A_ib x_b)` given macro values.
    pub(crate) fn back_substitute(&self, xm: &[C64], solved: &[Vec<C64>]) -> Vec<C64> {
        let md = self.macro_data.as_ref().unwrap();
        let mut x = vec![ZERO; self.dim()];
        for (i, &d) in md.macro_dofs.iter().enumerate() {
            x[d] = xm[i];
        }
        let parts: Vec<Vec<C64>> = md
            .groups
            .par_iter()
            .map(|g| {
                if g.interior.is_empty() {
                    return Vec::new();
                }
                let xb: Vec<C64> = g.boundary_macro.iter().map(|&i| xm[i]).collect();
                let mut y = mul_adjoint(&g.coupling, &xb);
                g.interior_solve(&mut y);
                y
            })
            .collect();
        for ((g, y), s) in md.groups.iter().zip(&parts).zip(solved) {
            for (k, &d) in g.interior.iter().enumerate() {
                x[d] = s[k] - y[k];
            }
        }
        x
    }
}

/// `A^H x` for a dense matrix.
fn mul_adjoint(a: &DMat, x: &[C64]) -> Vec<C64> {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * x[i]).sum()).collect()
}

/// Dense block of the given sparse rows over the union of their columns.
fn dense_rows(m: &CsrMatrix, rows: &[usize]) -> (Vec<usize>, DMat) {
    let mut cols: Vec<usize> = rows.iter().flat_map(|&r| m.row(r).map(|(j, _)| j)).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut d = DMat::zeros(rows.len(), cols.len());
    for (a, &r) in rows.iter().enumerate() {
        for (j, v) in m.row(r) {
            d[(a, cols.binary_search(&j).unwrap())] += v;
        }
    }
    (cols, d)
}

/// Coarse contributions `I_K^H S_K I_K` of every coarse element.
fn restricted_operators(md: &MacroData, inclusion: &CsrMatrix) -> Vec<ElementOperator> {
    md.groups
        .par_iter()
        .map(|g| {
            let (cols, ib) = dense_rows(inclusion, &g.boundary_macro);
            let mat = ib.adjoint() * &g.schur * &ib;
            let mat = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
            let n = cols.len();
            ElementOperator { dofs: cols, mat, rhs: vec![ZERO; n] }
        })
        .collect()
}

fn build_patches(matrix: &SparseHermitian, sets: Vec<Vec<usize>>) -> Result<Vec<Patch>, MgError> {
    sets.into_par_iter()
        .enumerate()
        .map(|(i, dofs)| {
            let sub = matrix.csr().principal_submatrix(&dofs);
            let factor = cholesky_of(&sub).map_err(|_| MgError::PatchNotPositiveDefinite(i))?;
            Ok(Patch { dofs, factor })
        })
        .collect()
}

fn overlap_damping(n: usize, patches: &[Patch]) -> f64 {
    let mut count = vec![0usize; n];
    for p in patches {
        for &d in &p.dofs {
            count[d] += 1;
        }
    }
    1.0 / count.into_iter().max().unwrap_or(1).max(1) as f64
}

/// The full multilevel hierarchy, finest level last.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub levels: Vec<GridLevel>,
    pub mode: CoarseOpMode,
    pub cycle: CycleConfig,
}

impl Hierarchy {
    /// `meshes` from coarsest to finest; `finest_ops` are the element
    /// contributions of the finest system. In store mode `stored[i]` holds
    /// the contributions assembled on `meshes[i]` for every coarser level.
    pub fn build(
        meshes: &[Mesh],
        finest_ops: Vec<ElementOperator>,
        stored: &[Vec<ElementOperator>],
        mode: CoarseOpMode,
        cycle: CycleConfig,
    ) -> Result<Self, MgError> {
        cycle.validate()?;
        let nl = meshes.len();
        assert!(nl >= 1, "at least one mesh is required");
        let mut layouts: Vec<Option<DofLayout>> = vec![None; nl];
        layouts[nl - 1] = Some(DofLayout::new(&meshes[nl - 1]));
        let mut ops = finest_ops;
        let mut levels_rev = Vec::with_capacity(nl);
        for i in (0..nl).rev() {
            let layout = layouts[i].take().unwrap_or_else(|| DofLayout::new(&meshes[i]));
            let (matrix, _) = assemble_operators(layout.num_dofs(), &ops);
            let (macro_data, inclusion, patches, next_ops, coarse_layout) = if i > 0 {
                let coarse_layout = DofLayout::new(&meshes[i - 1]);
                let md = macro_condense(&meshes[i], &layout, &ops, &meshes[i - 1], i)?;
                let inc = build_inclusion(&meshes[i - 1], &coarse_layout, &layout, &md.macro_dofs);
                let sets: Vec<Vec<usize>> = md.groups.iter().map(|g| g.boundary_macro.clone()).collect();
                let patch_sets = vertex_patches(&meshes[i - 1], &sets).into_iter().map(|p| p.dof_set).collect();
                let patches = build_patches(&md.schur, patch_sets)?;
                let next = match mode {
                    CoarseOpMode::Restrict => restricted_operators(&md, &inc),
                    CoarseOpMode::Store => stored.get(i - 1).cloned().ok_or(MgError::MissingStoredSystem(i - 1))?,
                };
                (Some(md), Some(inc), patches, next, Some(coarse_layout))
            } else {
                let sets: Vec<Vec<usize>> = ops.iter().map(|o| o.dofs.clone()).collect();
                let patch_sets = vertex_patches(&meshes[0], &sets).into_iter().map(|p| p.dof_set).collect();
                (None, None, build_patches(&matrix, patch_sets)?, Vec::new(), None)
            };
            let n_smooth = macro_data.as_ref().map(|m| m.num_macro()).unwrap_or(layout.num_dofs());
            let damping = cycle.damping.unwrap_or_else(|| overlap_damping(n_smooth, &patches));
            let bottom_factor = if i == 0 && cycle.bottom == BottomTreatment::ExactSolve {
                Some(cholesky_of(&matrix.csr().to_dense()).map_err(|_| MgError::BottomNotPositiveDefinite)?)
            } else {
                None
            };
            levels_rev.push(GridLevel {
                mesh: meshes[i].clone(),
                layout,
                operators: std::mem::replace(&mut ops, next_ops),
                matrix,
                macro_data,
                inclusion,
                patches,
                damping,
                bottom_factor,
            });
            if let Some(cl) = coarse_layout {
                layouts[i - 1] = Some(cl);
            }
        }
        levels_rev.reverse();
        Ok(Self { levels: levels_rev, mode, cycle })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &GridLevel {
        self.levels.last().unwrap()
    }
}
