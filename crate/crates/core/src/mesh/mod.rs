//! Hierarchical quadrilateral meshes of the unit square.
//!
//! A mesh is the set of leaves of a quadtree rooted at the single element
//! covering (0,1)^2. Refinement is isotropic and kept one-irregular by
//! closure refinements, so a leaf side is either a boundary side, shared
//! with one leaf of the same level, the parent of two finer sides, or a
//! constrained half of a coarser neighbour's side.
//!
//! Coordinates are stored as integers on a `2^-COORD_BITS` grid. Skeleton
//! edges are oriented along +x or +y, which coincides with "lower vertex id
//! to higher" for vertices numbered in (x, y) lexicographic order; the
//! global normal of an edge is +y for horizontal and +x for vertical edges.

mod marking;
mod patches;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

pub use marking::{dorfler_mark, dorfler_mark_with_exponent, wavelength_edge_test, MarkedSet, RefineKind};
pub use patches::{vertex_patches, VertexPatch};

pub const COORD_BITS: u32 = 24;
/// Deepest refinement level supported by the integer coordinate grid.
pub const MAX_LEVEL: u32 = 22;

const COORD_SCALE: f64 = (1u64 << COORD_BITS) as f64;

pub type VertexKey = (u32, u32);

pub fn vertex_coords(v: VertexKey) -> [f64; 2] {
    [v.0 as f64 / COORD_SCALE, v.1 as f64 / COORD_SCALE]
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid polynomial order {0} (must be >= 2)")]
    InvalidOrder(usize),
    #[error("element {0} is already at the maximum order")]
    OrderCapReached(usize),
    #[error("element {0} is not an active element")]
    UnknownElement(usize),
    #[error("element {0} marked more than once")]
    DuplicateMark(usize),
    #[error("refinement would exceed level {MAX_LEVEL}")]
    LevelLimit,
    #[error("all error indicators are zero")]
    AllZeroIndicators,
    #[error("invalid indicator input: {0}")]
    InvalidIndicators(String),
}

/// Edge between two vertices, `a` below/left of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub a: VertexKey,
    pub b: VertexKey,
}

impl EdgeKey {
    fn new(a: VertexKey, b: VertexKey) -> Self {
        debug_assert!(a < b);
        Self { a, b }
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.1 == self.b.1
    }

    pub fn length(&self) -> f64 {
        ((self.b.0 - self.a.0) + (self.b.1 - self.a.1)) as f64 / COORD_SCALE
    }

    pub fn midpoint(&self) -> VertexKey {
        ((self.a.0 + self.b.0) / 2, (self.a.1 + self.b.1) / 2)
    }

    /// Point at parameter `t` in [-1, 1].
    pub fn point(&self, t: f64) -> [f64; 2] {
        let a = vertex_coords(self.a);
        let b = vertex_coords(self.b);
        let s = 0.5 * (t + 1.0);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    /// Whether `other` is collinear with and contained in `self`.
    pub fn contains(&self, other: &EdgeKey) -> bool {
        if self.is_horizontal() != other.is_horizontal() {
            return false;
        }
        if self.is_horizontal() {
            self.a.1 == other.a.1 && self.a.0 <= other.a.0 && other.b.0 <= self.b.0
        } else {
            self.a.0 == other.a.0 && self.a.1 <= other.a.1 && other.b.1 <= self.b.1
        }
    }

    /// Whether `v` lies on the closed segment.
    pub fn contains_point(&self, v: VertexKey) -> bool {
        if self.is_horizontal() {
            v.1 == self.a.1 && self.a.0 <= v.0 && v.0 <= self.b.0
        } else {
            v.0 == self.a.0 && self.a.1 <= v.1 && v.1 <= self.b.1
        }
    }

    /// Parameter range `[t0, t1]` of the sub-segment `other` within `self`.
    pub fn sub_range(&self, other: &EdgeKey) -> (f64, f64) {
        (self.param_of(other.a), self.param_of(other.b))
    }

    pub fn param_of(&self, v: VertexKey) -> f64 {
        let (num, den) = if self.is_horizontal() {
            (v.0 - self.a.0, self.b.0 - self.a.0)
        } else {
            (v.1 - self.a.1, self.b.1 - self.a.1)
        };
        -1.0 + 2.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideKind {
    Boundary,
    /// Shared with a leaf of the same level.
    Regular,
    /// Parent of two constrained sides of finer neighbours.
    Parent,
    /// Half `half` of the neighbour's side `parent`.
    Constrained { parent: EdgeKey, half: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Side {
    /// The geometric side of this element.
    pub key: EdgeKey,
    pub kind: SideKind,
    /// Outward normal relative to the global edge normal (+1 or -1).
    pub sign: f64,
}

impl Side {
    /// The skeleton edge that carries degrees of freedom for this side.
    pub fn entity(&self) -> EdgeKey {
        match self.kind {
            SideKind::Constrained { parent, .. } => parent,
            _ => self.key,
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.kind == SideKind::Boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInfo {
    pub order: usize,
    pub boundary: bool,
    /// True when the edge is bisected on one side (its midpoint hangs).
    pub has_hanging_children: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Regular,
    /// Midpoint of `parent`, constrained by its trace.
    Hanging { parent: EdgeKey },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub node: usize,
    pub level: u32,
    pub order: usize,
    /// Lower-left corner and side length.
    pub origin: [f64; 2],
    pub h: f64,
    /// Counter-clockwise from the lower-left corner.
    pub corners: [VertexKey; 4],
    /// Bottom, right, top, left.
    pub sides: [Side; 4],
}

impl Element {
    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.h * (xi[0] + 1.0),
            self.origin[1] + 0.5 * self.h * (xi[1] + 1.0),
        ]
    }

    pub fn max_edge_length(&self) -> f64 {
        self.h
    }

    /// Integer bounding box `[x0, x1] x [y0, y1]`.
    pub fn bounds(&self) -> (VertexKey, VertexKey) {
        (self.corners[0], self.corners[2])
    }

    /// Strictly inside the open element.
    pub fn contains_interior(&self, v: VertexKey) -> bool {
        let (lo, hi) = self.bounds();
        lo.0 < v.0 && v.0 < hi.0 && lo.1 < v.1 && v.1 < hi.1
    }

    pub fn contains_closed(&self, v: VertexKey) -> bool {
        let (lo, hi) = self.bounds();
        lo.0 <= v.0 && v.0 <= hi.0 && lo.1 <= v.1 && v.1 <= hi.1
    }

    /// Side index and parameter of a point on the element boundary.
    pub fn locate_on_boundary(&self, v: VertexKey) -> Option<(usize, f64)> {
        self.sides
            .iter()
            .position(|s| s.key.contains_point(v))
            .map(|s| (s, self.sides[s].key.param_of(v)))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    level: u32,
    i: u32,
    j: u32,
    parent: Option<usize>,
    children: Option<[usize; 4]>,
    order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Node>,
    lookup: HashMap<(u32, u32, u32), usize>,
    p_max: usize,
    generation: usize,
    elements: Vec<Element>,
    element_of_node: HashMap<usize, usize>,
    edges: BTreeMap<EdgeKey, EdgeInfo>,
    constrained: BTreeMap<EdgeKey, (EdgeKey, usize)>,
    vertices: BTreeMap<VertexKey, VertexKind>,
}

const DIRS: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
const SIDE_SIGN: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];

impl Mesh {
    /// One element covering the unit square.
    pub fn initial(p0: usize, p_max: usize) -> Result<Self, MeshError> {
        if p0 < 2 {
            return Err(MeshError::InvalidOrder(p0));
        }
        if p_max < p0 {
            return Err(MeshError::InvalidOrder(p_max));
        }
        let root = Node { level: 0, i: 0, j: 0, parent: None, children: None, order: p0 };
        let mut lookup = HashMap::new();
        lookup.insert((0, 0, 0), 0);
        Ok(Self::from_tree(vec![root], lookup, p_max, 0))
    }

    fn from_tree(nodes: Vec<Node>, lookup: HashMap<(u32, u32, u32), usize>, p_max: usize, generation: usize) -> Self {
        let mut mesh = Self {
            nodes,
            lookup,
            p_max,
            generation,
            elements: Vec::new(),
            element_of_node: HashMap::new(),
            edges: BTreeMap::new(),
            constrained: BTreeMap::new(),
            vertices: BTreeMap::new(),
        };
        mesh.build_skeleton();
        mesh
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &Element {
        &self.elements[id]
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// Number of refinement steps since the initial mesh.
    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Unconstrained skeleton edges (those carrying degrees of freedom).
    pub fn edges(&self) -> &BTreeMap<EdgeKey, EdgeInfo> {
        &self.edges
    }

    /// Constrained edges with their parent edge and half index.
    pub fn constrained_edges(&self) -> &BTreeMap<EdgeKey, (EdgeKey, usize)> {
        &self.constrained
    }

    pub fn vertices(&self) -> &BTreeMap<VertexKey, VertexKind> {
        &self.vertices
    }

    pub fn interior_edge_count(&self) -> usize {
        self.edges.values().filter(|e| !e.boundary).count()
    }

    pub fn element_id_of_node(&self, node: usize) -> Option<usize> {
        self.element_of_node.get(&node).copied()
    }

    fn cell_size(level: u32) -> u32 {
        1 << (COORD_BITS - level)
    }

    fn node_corners(n: &Node) -> [VertexKey; 4] {
        let s = Self::cell_size(n.level);
        let (x0, y0) = (n.i * s, n.j * s);
        [(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s)]
    }

    fn side_keys(c: &[VertexKey; 4]) -> [EdgeKey; 4] {
        [
            EdgeKey::new(c[0], c[1]),
            EdgeKey::new(c[1], c[2]),
            EdgeKey::new(c[3], c[2]),
            EdgeKey::new(c[0], c[3]),
        ]
    }

    fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].children.is_none()
    }

    fn neighbor_cell(n: &Node, side: usize) -> Option<(u32, u32, u32)> {
        let (di, dj) = DIRS[side];
        let (ni, nj) = (n.i as i64 + di, n.j as i64 + dj);
        let lim = 1i64 << n.level;
        if ni < 0 || nj < 0 || ni >= lim || nj >= lim {
            None
        } else {
            Some((n.level, ni as u32, nj as u32))
        }
    }

    /// Children of `node` adjacent to its side `side`.
    fn children_on_side(&self, node: usize, side: usize) -> Option<[usize; 2]> {
        let ch = self.nodes[node].children?;
        // children indexed cx + 2 cy
        Some(match side {
            0 => [ch[0], ch[1]],
            1 => [ch[1], ch[3]],
            2 => [ch[2], ch[3]],
            3 => [ch[0], ch[2]],
            _ => unreachable!(),
        })
    }

    fn classify_side(&self, node: usize, side: usize, key: EdgeKey) -> SideKind {
        let n = &self.nodes[node];
        let Some(cell) = Self::neighbor_cell(n, side) else {
            return SideKind::Boundary;
        };
        match self.lookup.get(&cell) {
            Some(&nb) if self.is_leaf(nb) => SideKind::Regular,
            Some(_) => SideKind::Parent,
            None => {
                let pcell = (cell.0 - 1, cell.1 / 2, cell.2 / 2);
                let &pn = self.lookup.get(&pcell).expect("mesh is not one-irregular");
                let pc = Self::node_corners(&self.nodes[pn]);
                let parent = Self::side_keys(&pc)[(side + 2) % 4];
                let half = if key.a == parent.a { 0 } else { 1 };
                SideKind::Constrained { parent, half }
            }
        }
    }

    fn build_skeleton(&mut self) {
        let leaves: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.is_leaf(i)).collect();
        let mut elements = Vec::with_capacity(leaves.len());
        let mut edges: BTreeMap<EdgeKey, EdgeInfo> = BTreeMap::new();
        let mut constrained = BTreeMap::new();
        for &id in &leaves {
            let n = &self.nodes[id];
            let corners = Self::node_corners(n);
            let keys = Self::side_keys(&corners);
            let sides: [Side; 4] = std::array::from_fn(|s| Side {
                key: keys[s],
                kind: self.classify_side(id, s, keys[s]),
                sign: SIDE_SIGN[s],
            });
            for side in &sides {
                let ent = side.entity();
                let info = edges.entry(ent).or_insert(EdgeInfo {
                    order: n.order,
                    boundary: false,
                    has_hanging_children: false,
                });
                info.order = info.order.min(n.order);
                match side.kind {
                    SideKind::Boundary => info.boundary = true,
                    SideKind::Parent => info.has_hanging_children = true,
                    SideKind::Constrained { parent, half } => {
                        constrained.insert(side.key, (parent, half));
                    }
                    SideKind::Regular => {}
                }
            }
            let h = 1.0 / (1u64 << n.level) as f64;
            elements.push(Element {
                node: id,
                level: n.level,
                order: n.order,
                origin: [n.i as f64 * h, n.j as f64 * h],
                h,
                corners,
                sides,
            });
        }
        let mut vertices = BTreeMap::new();
        for e in &elements {
            for c in e.corners {
                vertices.insert(c, VertexKind::Regular);
            }
        }
        for (k, info) in &edges {
            if info.has_hanging_children {
                vertices.insert(k.midpoint(), VertexKind::Hanging { parent: *k });
            }
        }
        self.element_of_node = elements.iter().enumerate().map(|(i, e)| (e.node, i)).collect();
        self.elements = elements;
        self.edges = edges;
        self.constrained = constrained;
        self.vertices = vertices;
    }

    /// Applies h- and p-refinements, then closure h-refinements restoring
    /// one-irregularity.
    pub fn refine(&self, marked: &MarkedSet) -> Result<Mesh, MeshError> {
        let mut seen = BTreeSet::new();
        for &(e, kind) in marked.entries() {
            if e >= self.elements.len() {
                return Err(MeshError::UnknownElement(e));
            }
            if !seen.insert(e) {
                return Err(MeshError::DuplicateMark(e));
            }
            if kind == RefineKind::P && self.elements[e].order >= self.p_max {
                return Err(MeshError::OrderCapReached(e));
            }
            if kind == RefineKind::H && self.elements[e].level >= MAX_LEVEL {
                return Err(MeshError::LevelLimit);
            }
        }
        let mut nodes = self.nodes.clone();
        let mut lookup = self.lookup.clone();
        for &(e, kind) in marked.entries() {
            let node = self.elements[e].node;
            match kind {
                RefineKind::P => nodes[node].order += 1,
                RefineKind::H => split(&mut nodes, &mut lookup, node),
            }
        }
        // closure
        loop {
            let mut to_split = Vec::new();
            for id in 0..nodes.len() {
                if nodes[id].children.is_some() {
                    continue;
                }
                let n = &nodes[id];
                let needs = (0..4).any(|s| {
                    let Some(cell) = Self::neighbor_cell(n, s) else { return false };
                    let Some(&nb) = lookup.get(&cell) else { return false };
                    let Some(ch) = nodes[nb].children else { return false };
                    let adj = match (s + 2) % 4 {
                        0 => [ch[0], ch[1]],
                        1 => [ch[1], ch[3]],
                        2 => [ch[2], ch[3]],
                        _ => [ch[0], ch[2]],
                    };
                    adj.iter().any(|&c| nodes[c].children.is_some())
                });
                if needs {
                    if n.level >= MAX_LEVEL {
                        return Err(MeshError::LevelLimit);
                    }
                    to_split.push(id);
                }
            }
            if to_split.is_empty() {
                break;
            }
            for id in to_split {
                split(&mut nodes, &mut lookup, id);
            }
        }
        Ok(Mesh::from_tree(nodes, lookup, self.p_max, self.generation + 1))
    }

    pub fn refine_uniform_h(&self) -> Result<Mesh, MeshError> {
        self.refine(&MarkedSet::all(self.num_elements(), RefineKind::H))
    }

    pub fn refine_uniform_p(&self) -> Result<Mesh, MeshError> {
        self.refine(&MarkedSet::all(self.num_elements(), RefineKind::P))
    }

    /// Exhaustive check that every pair of edge-adjacent leaves differs by at
    /// most one level.
    pub fn is_one_irregular(&self) -> bool {
        for e in &self.elements {
            let n = &self.nodes[e.node];
            for s in 0..4 {
                let Some(cell) = Self::neighbor_cell(n, s) else { continue };
                match self.lookup.get(&cell) {
                    Some(&nb) if self.is_leaf(nb) => {}
                    Some(&nb) => {
                        let adj = self.children_on_side(nb, (s + 2) % 4).unwrap();
                        if adj.iter().any(|&c| !self.is_leaf(c)) {
                            return false;
                        }
                    }
                    None => {
                        let pcell = (cell.0 - 1, cell.1 / 2, cell.2 / 2);
                        match self.lookup.get(&pcell) {
                            Some(&p) if self.is_leaf(p) => {}
                            _ => return false,
                        }
                    }
                }
            }
        }
        true
    }

    /// Leaf of this mesh that is an ancestor of (or equal to) `node` of a
    /// refined mesh built from this one.
    pub fn ancestor_element(&self, fine: &Mesh, node: usize) -> Option<usize> {
        let mut cur = Some(node);
        while let Some(id) = cur {
            if let Some(&e) = self.element_of_node.get(&id) {
                return Some(e);
            }
            cur = fine.nodes.get(id).and_then(|n| n.parent);
        }
        None
    }

    /// Leaf containing a point given on the doubled integer grid. The point
    /// must not lie on a leaf boundary.
    pub fn element_containing_doubled(&self, px: u64, py: u64) -> usize {
        let mut id = 0;
        loop {
            let n = &self.nodes[id];
            let Some(ch) = n.children else {
                return self.element_of_node[&id];
            };
            let s = 2 * Self::cell_size(n.level) as u64;
            let mx = n.i as u64 * s + s / 2;
            let my = n.j as u64 * s + s / 2;
            let cx = usize::from(px > mx);
            let cy = usize::from(py > my);
            id = ch[cx + 2 * cy];
        }
    }

    /// An element having the skeleton edge `key` (or a part of it) on its
    /// boundary, together with the side index.
    pub fn element_on_edge(&self, key: &EdgeKey) -> (usize, usize) {
        // probe just inside the positive side unless on the top/right boundary
        let mid = key.midpoint();
        let (mut px, mut py) = (2 * mid.0 as u64, 2 * mid.1 as u64);
        let top = 2u64 << COORD_BITS;
        if key.is_horizontal() {
            // a quarter point avoids hanging midpoints of finer sides
            px = 2 * key.a.0 as u64 + (key.b.0 - key.a.0) as u64 / 2;
            if py < top {
                py += 1;
            } else {
                py -= 1;
            }
        } else {
            py = 2 * key.a.1 as u64 + (key.b.1 - key.a.1) as u64 / 2;
            if px < top {
                px += 1;
            } else {
                px -= 1;
            }
        }
        let e = self.element_containing_doubled(px, py);
        let side = self.elements[e]
            .sides
            .iter()
            .position(|s| s.key.contains(key) || key.contains(&s.key))
            .expect("probe element does not touch the edge");
        (e, side)
    }
}

fn split(nodes: &mut Vec<Node>, lookup: &mut HashMap<(u32, u32, u32), usize>, id: usize) {
    if nodes[id].children.is_some() {
        return;
    }
    let (level, i, j, order) = (nodes[id].level, nodes[id].i, nodes[id].j, nodes[id].order);
    let mut ch = [0; 4];
    for cy in 0..2 {
        for cx in 0..2 {
            let nid = nodes.len();
            let key = (level + 1, 2 * i + cx, 2 * j + cy);
            nodes.push(Node { level: key.0, i: key.1, j: key.2, parent: Some(id), children: None, order });
            lookup.insert(key, nid);
            ch[(cx + 2 * cy) as usize] = nid;
        }
    }
    nodes[id].children = Some(ch);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_mesh_topology() {
        let m = Mesh::initial(2, 5).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.vertices().len(), 4);
        assert_eq!(m.edges().len(), 4);
        assert!(m.edges().values().all(|e| e.boundary && e.order == 2));
        assert_eq!(m.interior_edge_count(), 0);
        let m3 = Mesh::initial(3, 5).unwrap();
        assert_eq!(m3.element(0).order, 3);
        assert_eq!(m3.edges().len(), 4);
        assert_eq!(Mesh::initial(1, 5).unwrap_err(), MeshError::InvalidOrder(1));
    }

    #[test]
    fn uniform_refinement_counts() {
        let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.edges().len(), 12);
        assert_eq!(m.interior_edge_count(), 4);
        assert_eq!(m.vertices().len(), 9);
        assert!(m.constrained_edges().is_empty());
    }

    #[test]
    fn single_h_refinement_creates_constraints() {
        let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
        let f = m.refine(&MarkedSet::new(vec![(0, RefineKind::H)]).unwrap()).unwrap();
        assert_eq!(f.num_elements(), 7);
        // the two interior sides of the refined quadrant are bisected
        assert_eq!(f.constrained_edges().len(), 4);
        let hanging = f.vertices().values().filter(|v| matches!(v, VertexKind::Hanging { .. })).count();
        assert_eq!(hanging, 2);
        assert!(f.is_one_irregular());
    }

    #[test]
    fn p_refinement_keeps_topology() {
        let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
        let f = m.refine_uniform_p().unwrap();
        assert_eq!(f.num_elements(), 4);
        assert!(f.elements().iter().all(|e| e.order == 3));
        assert!(f.edges().values().all(|e| e.order == 3));
        let capped = Mesh::initial(2, 2).unwrap();
        assert_eq!(capped.refine_uniform_p().unwrap_err(), MeshError::OrderCapReached(0));
    }

    #[test]
    fn closure_restores_one_irregularity() {
        // repeatedly refine the element touching the origin
        let mut m = Mesh::initial(2, 5).unwrap();
        for _ in 0..5 {
            let e = m.element_containing_doubled(1, 1);
            m = m.refine(&MarkedSet::new(vec![(e, RefineKind::H)]).unwrap()).unwrap();
            assert!(m.is_one_irregular());
        }
        // corner refinement never needs closure
        assert_eq!(m.num_elements(), 16);
        // refining toward the centre does
        let mut m = Mesh::initial(2, 5).unwrap();
        let c = 1u64 << COORD_BITS;
        for _ in 0..5 {
            let e = m.element_containing_doubled(c - 1, c - 1);
            m = m.refine(&MarkedSet::new(vec![(e, RefineKind::H)]).unwrap()).unwrap();
            assert!(m.is_one_irregular());
        }
        assert!(m.num_elements() > 16);
    }

    #[test]
    fn refinement_replays_deterministically() {
        let marks = |m: &Mesh| {
            let n = m.num_elements();
            MarkedSet::new((0..n).filter(|i| i % 3 == 0).map(|i| (i, if i % 2 == 0 { RefineKind::H } else { RefineKind::P })).collect())
                .unwrap()
        };
        let run = || {
            let mut m = Mesh::initial(2, 5).unwrap();
            for _ in 0..4 {
                m = m.refine(&marks(&m)).unwrap();
            }
            m
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_marks_rejected() {
        let m = Mesh::initial(2, 5).unwrap();
        assert!(MarkedSet::new(vec![(0, RefineKind::H), (0, RefineKind::P)]).is_err());
        assert_eq!(
            m.refine(&MarkedSet::new(vec![(3, RefineKind::H)]).unwrap()).unwrap_err(),
            MeshError::UnknownElement(3)
        );
    }

    #[test]
    fn edge_orders_follow_minimum_rule() {
        let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
        let f = m.refine(&MarkedSet::new(vec![(0, RefineKind::P)]).unwrap()).unwrap();
        let e0 = f.element(0);
        assert_eq!(e0.order, 3);
        for s in &e0.sides {
            let info = f.edges()[&s.entity()];
            assert_eq!(info.order, if s.is_boundary() { 3 } else { 2 });
        }
    }
}
