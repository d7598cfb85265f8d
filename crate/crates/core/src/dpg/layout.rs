use std::collections::{BTreeMap, HashMap};

use crate::mesh::{EdgeKey, Mesh, SideKind, VertexKey, VertexKind};
use crate::shape::poly1d::h1_1d;
use crate::shape::{constraint_coeffs, ConstraintCoeffs};

/// Geometric carrier of a global trace DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofEntity {
    Vertex(VertexKey),
    /// Edge bubble of degree `k >= 2` of the continuous trace.
    Bubble(EdgeKey, usize),
    /// Legendre mode `m` of the normal flux (global edge normal).
    Flux(EdgeKey, usize),
}

impl DofEntity {
    /// A point identifying where the DOF lives, on the integer grid: the
    /// vertex itself or the edge midpoint.
    pub fn anchor(&self) -> VertexKey {
        match self {
            DofEntity::Vertex(v) => *v,
            DofEntity::Bubble(e, _) | DofEntity::Flux(e, _) => e.midpoint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EdgeDofs {
    order: usize,
    bubble_start: usize,
    flux_start: Option<usize>,
}

/// Position of each trace function in an element's local trace vector:
/// the four corner values, then per side the bubbles `2..=p_s`, then per
/// non-boundary side the flux modes `0..p_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalLayout {
    pub side_orders: [usize; 4],
    pub boundary: [bool; 4],
    pub bubble_offset: [usize; 4],
    pub flux_offset: [Option<usize>; 4],
    pub dim: usize,
}

/// Corner indices (local) at the start and end of each side.
pub const SIDE_CORNERS: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];

impl LocalLayout {
    pub fn new(side_orders: [usize; 4], boundary: [bool; 4]) -> Self {
        let mut off = 4;
        let mut bubble_offset = [0; 4];
        for s in 0..4 {
            bubble_offset[s] = off;
            off += side_orders[s] - 1;
        }
        let mut flux_offset = [None; 4];
        for s in 0..4 {
            if !boundary[s] {
                flux_offset[s] = Some(off);
                off += side_orders[s];
            }
        }
        Self { side_orders, boundary, bubble_offset, flux_offset, dim: off }
    }

    /// Local index of bubble `k` (2..=p_s) on side `s`.
    pub fn bubble(&self, s: usize, k: usize) -> usize {
        self.bubble_offset[s] + k - 2
    }

    pub fn flux(&self, s: usize, m: usize) -> Option<usize> {
        self.flux_offset[s].map(|o| o + m)
    }

    /// Continuous trace on side `s` at parameter `t` from local coefficients.
    pub fn eval_h1_side<T>(&self, local: &[T], s: usize, t: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let p = self.side_orders[s];
        let (v, _) = h1_1d(p, t);
        let (a, b) = SIDE_CORNERS[s];
        let mut acc = local[a] * v[0] + local[b] * v[1];
        for (k, vk) in v.iter().enumerate().skip(2) {
            acc = acc + local[self.bubble(s, k)] * *vk;
        }
        acc
    }

    pub fn eval_flux_side<T>(&self, local: &[T], s: usize, t: f64) -> Option<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let off = self.flux_offset[s]?;
        let p = self.side_orders[s];
        let leg = crate::shape::poly1d::legendre(p - 1, t);
        let mut acc = local[off] * leg[0];
        for m in 1..p {
            acc = acc + local[off + m] * leg[m];
        }
        Some(acc)
    }
}

/// Sparse real row: pairs of (global DOF, coefficient).
pub type SparseRow = Vec<(usize, f64)>;

/// Global numbering of the trace DOFs of a mesh together with the map from
/// each element's local trace vector to the global one (constraints
/// included).
#[derive(Debug, Clone)]
pub struct DofLayout {
    entities: Vec<DofEntity>,
    vertex_dof: BTreeMap<VertexKey, usize>,
    edge_dofs: BTreeMap<EdgeKey, EdgeDofs>,
    locals: Vec<LocalLayout>,
    rows: Vec<Vec<SparseRow>>,
    constrained: usize,
}

impl DofLayout {
    pub fn new(mesh: &Mesh) -> Self {
        let mut entities = Vec::new();
        let mut vertex_dof = BTreeMap::new();
        for (v, kind) in mesh.vertices() {
            if *kind == VertexKind::Regular {
                vertex_dof.insert(*v, entities.len());
                entities.push(DofEntity::Vertex(*v));
            }
        }
        let mut edge_dofs = BTreeMap::new();
        for (e, info) in mesh.edges() {
            let bubble_start = entities.len();
            for k in 2..=info.order {
                entities.push(DofEntity::Bubble(*e, k));
            }
            let flux_start = if info.boundary {
                None
            } else {
                let s = entities.len();
                for m in 0..info.order {
                    entities.push(DofEntity::Flux(*e, m));
                }
                Some(s)
            };
            edge_dofs.insert(*e, EdgeDofs { order: info.order, bubble_start, flux_start });
        }

        let mut constrained = mesh.vertices().values().filter(|k| **k != VertexKind::Regular).count();
        for (parent, _) in mesh.constrained_edges().values() {
            let order = edge_dofs[parent].order;
            constrained += 2 * order - 1;
        }

        let mut builder = RowBuilder {
            mesh,
            vertex_dof: &vertex_dof,
            edge_dofs: &edge_dofs,
            memo: HashMap::new(),
            coeffs: HashMap::new(),
        };
        let mut locals = Vec::with_capacity(mesh.num_elements());
        let mut rows = Vec::with_capacity(mesh.num_elements());
        for el in mesh.elements() {
            let orders = el.sides.map(|s| edge_dofs[&s.entity()].order);
            let boundary = el.sides.map(|s| s.is_boundary());
            let local = LocalLayout::new(orders, boundary);
            let mut r: Vec<SparseRow> = vec![Vec::new(); local.dim];
            for c in 0..4 {
                r[c] = builder.vertex(el.corners[c]);
            }
            for (s, side) in el.sides.iter().enumerate() {
                let p = orders[s];
                match side.kind {
                    SideKind::Constrained { parent, half } => {
                        let parent_rows = builder.parent_h1(parent);
                        let cc = builder.coeffs(p).clone();
                        for m in 2..=p {
                            let mut row = Vec::new();
                            for (k, pr) in parent_rows.iter().enumerate() {
                                let c = cc.h1[half][(m, k)];
                                if c != 0.0 {
                                    row.extend(pr.iter().map(|(d, v)| (*d, c * v)));
                                }
                            }
                            r[local.bubble(s, m)] = compress(row);
                        }
                        let pe = edge_dofs[&parent];
                        let fs = pe.flux_start.expect("constrained edge on the boundary");
                        for m in 0..p {
                            let row = (0..p)
                                .filter(|&k| cc.flux[half][(m, k)] != 0.0)
                                .map(|k| (fs + k, cc.flux[half][(m, k)]))
                                .collect();
                            r[local.flux(s, m).unwrap()] = row;
                        }
                    }
                    _ => {
                        let ed = edge_dofs[&side.key];
                        for k in 2..=p {
                            r[local.bubble(s, k)] = vec![(ed.bubble_start + k - 2, 1.0)];
                        }
                        if let Some(fs) = ed.flux_start {
                            for m in 0..p {
                                r[local.flux(s, m).unwrap()] = vec![(fs + m, 1.0)];
                            }
                        }
                    }
                }
            }
            locals.push(local);
            rows.push(r);
        }
        Self { entities, vertex_dof, edge_dofs, locals, rows, constrained }
    }

    pub fn num_dofs(&self) -> usize {
        self.entities.len()
    }

    /// DOFs removed by hanging-node constraints (each counted once).
    pub fn num_constrained(&self) -> usize {
        self.constrained
    }

    pub fn entity(&self, dof: usize) -> DofEntity {
        self.entities[dof]
    }

    pub fn entities(&self) -> &[DofEntity] {
        &self.entities
    }

    pub fn vertex_dof(&self, v: VertexKey) -> Option<usize> {
        self.vertex_dof.get(&v).copied()
    }

    /// Bubble DOF `k` of edge `e`.
    pub fn bubble_dof(&self, e: &EdgeKey, k: usize) -> Option<usize> {
        let d = self.edge_dofs.get(e)?;
        (2..=d.order).contains(&k).then(|| d.bubble_start + k - 2)
    }

    pub fn flux_dof(&self, e: &EdgeKey, m: usize) -> Option<usize> {
        let d = self.edge_dofs.get(e)?;
        if m < d.order {
            d.flux_start.map(|s| s + m)
        } else {
            None
        }
    }

    pub fn edge_order(&self, e: &EdgeKey) -> Option<usize> {
        self.edge_dofs.get(e).map(|d| d.order)
    }

    pub fn local(&self, element: usize) -> &LocalLayout {
        &self.locals[element]
    }

    /// Rows of the local-to-global map of an element.
    pub fn rows(&self, element: usize) -> &[SparseRow] {
        &self.rows[element]
    }

    /// Sorted global DOFs touched by an element.
    pub fn element_dofs(&self, element: usize) -> Vec<usize> {
        let mut d: Vec<usize> = self.rows[element].iter().flatten().map(|(g, _)| *g).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Dense local-to-global block over `dofs` (local dim x dofs.len()).
    pub fn element_matrix(&self, element: usize, dofs: &[usize]) -> nalgebra::DMatrix<f64> {
        let rows = &self.rows[element];
        let mut c = nalgebra::DMatrix::zeros(rows.len(), dofs.len());
        for (i, row) in rows.iter().enumerate() {
            for (g, v) in row {
                let j = dofs.binary_search(g).expect("dof outside element support");
                c[(i, j)] += v;
            }
        }
        c
    }

    /// Local trace vector of an element from a global vector.
    pub fn gather<T>(&self, element: usize, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        self.rows[element]
            .iter()
            .map(|row| row.iter().fold(T::default(), |acc, (g, v)| acc + x[*g] * *v))
            .collect()
    }
}

fn compress(mut row: SparseRow) -> SparseRow {
    row.sort_by_key(|(d, _)| *d);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (d, v) in row {
        match out.last_mut() {
            Some((ld, lv)) if *ld == d => *lv += v,
            _ => out.push((d, v)),
        }
    }
    out.retain(|(_, v)| *v != 0.0);
    out
}

struct RowBuilder<'a> {
    mesh: &'a Mesh,
    vertex_dof: &'a BTreeMap<VertexKey, usize>,
    edge_dofs: &'a BTreeMap<EdgeKey, EdgeDofs>,
    memo: HashMap<VertexKey, SparseRow>,
    coeffs: HashMap<usize, ConstraintCoeffs>,
}

impl RowBuilder<'_> {
    fn coeffs(&mut self, p: usize) -> &ConstraintCoeffs {
        self.coeffs.entry(p).or_insert_with(|| constraint_coeffs(p))
    }

    /// Value of the global trace at a vertex as a combination of DOFs.
    fn vertex(&mut self, v: VertexKey) -> SparseRow {
        if let Some(&d) = self.vertex_dof.get(&v) {
            return vec![(d, 1.0)];
        }
        if let Some(r) = self.memo.get(&v) {
            return r.clone();
        }
        let Some(VertexKind::Hanging { parent }) = self.mesh.vertices().get(&v).copied() else {
            panic!("vertex {v:?} is not part of the mesh");
        };
        let ed = self.edge_dofs[&parent];
        let mut row: SparseRow = Vec::new();
        for end in [parent.a, parent.b] {
            row.extend(self.vertex(end).into_iter().map(|(d, c)| (d, 0.5 * c)));
        }
        let (vals, _) = h1_1d(ed.order, 0.0);
        for k in 2..=ed.order {
            if vals[k] != 0.0 {
                row.push((ed.bubble_start + k - 2, vals[k]));
            }
        }
        let row = compress(row);
        self.memo.insert(v, row.clone());
        row
    }

    /// Rows of the parent edge's H1 trace coefficients `[a_0, a_1, phi_2..]`.
    fn parent_h1(&mut self, parent: EdgeKey) -> Vec<SparseRow> {
        let ed = self.edge_dofs[&parent];
        let mut out = vec![self.vertex(parent.a), self.vertex(parent.b)];
        for k in 2..=ed.order {
            out.push(vec![(ed.bubble_start + k - 2, 1.0)]);
        }
        out
    }
}
