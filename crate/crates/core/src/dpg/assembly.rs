use rayon::prelude::*;

use super::element::{element_forms, element_gram, residual_sq, Recovery};
use super::layout::DofLayout;
use super::{condense, field_dim, DpgError, ElementGeometry, FieldValue, ProblemConfig};
use crate::la::{cholesky_of, CsrMatrix, DMat, SparseHermitian, C64};
use crate::mesh::Mesh;
use crate::shape::poly1d::gauss_legendre;
use crate::shape::L2Basis;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Contribution `C^T A C` of one element over the global DOFs `dofs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementOperator {
    pub dofs: Vec<usize>,
    pub mat: DMat,
    pub rhs: Vec<C64>,
}

/// The condensed trace system of a mesh.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub layout: DofLayout,
    pub matrix: SparseHermitian,
    pub rhs: Vec<C64>,
    pub operators: Vec<ElementOperator>,
    pub recovery: Vec<Recovery>,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.layout.num_dofs()
    }
}

/// Scatters element contributions in element order.
pub fn assemble_operators(n: usize, ops: &[ElementOperator]) -> (SparseHermitian, Vec<C64>) {
    let nnz: usize = ops.iter().map(|o| o.dofs.len() * o.dofs.len()).sum();
    let mut trips = Vec::with_capacity(nnz);
    let mut rhs = vec![ZERO; n];
    for op in ops {
        for (a, &i) in op.dofs.iter().enumerate() {
            rhs[i] += op.rhs[a];
            for (b, &j) in op.dofs.iter().enumerate() {
                trips.push((i, j, op.mat[(a, b)]));
            }
        }
    }
    (SparseHermitian::symmetrized(CsrMatrix::from_triplets(n, n, trips)), rhs)
}

/// Condensed element contribution mapped through the local-to-global rows.
pub fn element_operator(
    mesh: &Mesh,
    layout: &DofLayout,
    cfg: &ProblemConfig,
    id: usize,
) -> Result<(ElementOperator, Recovery), DpgError> {
    let el = mesh.element(id);
    let geom = ElementGeometry::from(el);
    let pt = el.order + cfg.delta_p;
    let local = layout.local(id);
    let g = element_gram(cfg, &geom, pt);
    let (b, bhat, l) = element_forms(cfg, &geom, el.order, pt, local);
    let c = condense(&g, &b, &bhat, &l)?;
    let dofs = layout.element_dofs(id);
    let cm = layout.element_matrix(id, &dofs).map(|v| C64::new(v, 0.0));
    let mat = cm.tr_mul(&(c.acond.matrix() * &cm));
    let rhs = cm.tr_mul(&c.lcond);
    Ok((
        ElementOperator { dofs, mat: (&mat + mat.adjoint()) * C64::new(0.5, 0.0), rhs: rhs.as_slice().to_vec() },
        c.recovery,
    ))
}

pub fn assemble_global(mesh: &Mesh, cfg: &ProblemConfig) -> Result<AssembledSystem, DpgError> {
    cfg.validate()?;
    let layout = DofLayout::new(mesh);
    let results: Vec<_> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|id| element_operator(mesh, &layout, cfg, id))
        .collect::<Result<_, _>>()?;
    let (operators, recovery): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (matrix, rhs) = assemble_operators(layout.num_dofs(), &operators);
    Ok(AssembledSystem { layout, matrix, rhs, operators, recovery })
}

/// Per-element field coefficients, ordered `[p | u_x | u_y]`, each in the
/// tensor Legendre basis of degree `order - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub orders: Vec<usize>,
    pub coeffs: Vec<Vec<C64>>,
}

impl FieldSolution {
    /// Pressure and velocity at reference point `xi` of element `id`.
    pub fn eval(&self, id: usize, xi: [f64; 2]) -> FieldValue {
        let p = self.orders[id];
        let f = L2Basis::new(p - 1).eval(xi);
        let n = f.len();
        let c = &self.coeffs[id];
        let comp = |off: usize| f.iter().enumerate().map(|(i, v)| c[off + i] * *v).sum::<C64>();
        (comp(0), [comp(n), comp(2 * n)])
    }
}

pub fn recover_fields(mesh: &Mesh, system: &AssembledSystem, x: &[C64]) -> FieldSolution {
    let coeffs = (0..mesh.num_elements())
        .into_par_iter()
        .map(|id| system.recovery[id].recover(&system.layout.gather(id, x)))
        .collect();
    FieldSolution { orders: mesh.elements().iter().map(|e| e.order).collect(), coeffs }
}

/// Squared element residuals `eta_K^2` in the dual test norm.
pub fn error_indicators(
    mesh: &Mesh,
    cfg: &ProblemConfig,
    layout: &DofLayout,
    fields: &FieldSolution,
    x: &[C64],
) -> Result<Vec<f64>, DpgError> {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|id| {
            let el = mesh.element(id);
            let geom = ElementGeometry::from(el);
            let pt = el.order + cfg.delta_p;
            let g = element_gram(cfg, &geom, pt);
            let (b, bhat, l) = element_forms(cfg, &geom, el.order, pt, layout.local(id));
            let lg = cholesky_of(g.matrix()).map_err(|_| DpgError::GramNotPositiveDefinite)?;
            Ok(residual_sq(&lg, &b, &bhat, &l, &fields.coeffs[id], &layout.gather(id, x)))
        })
        .collect()
}

/// `|l - B u - Bhat u_hat|^2` in the dual norm of the whole broken test
/// space, computed from globally assembled sparse operators. The Gram
/// operator is inverted through the connected components of its sparsity
/// graph.
pub fn global_residual_sq(
    mesh: &Mesh,
    cfg: &ProblemConfig,
    layout: &DofLayout,
    fields: &FieldSolution,
    x: &[C64],
) -> Result<f64, DpgError> {
    let ne = mesh.num_elements();
    let mut test_off = vec![0; ne + 1];
    let mut field_off = vec![0; ne + 1];
    for (id, el) in mesh.elements().iter().enumerate() {
        test_off[id + 1] = test_off[id] + super::test_dim(el.order + cfg.delta_p);
        field_off[id + 1] = field_off[id] + field_dim(el.order);
    }
    let (nt, nf) = (test_off[ne], field_off[ne]);
    let blocks: Vec<_> = (0..ne)
        .into_par_iter()
        .map(|id| {
            let el = mesh.element(id);
            let geom = ElementGeometry::from(el);
            let pt = el.order + cfg.delta_p;
            let g = element_gram(cfg, &geom, pt);
            let (b, bhat, l) = element_forms(cfg, &geom, el.order, pt, layout.local(id));
            (g, b, bhat, l)
        })
        .collect();
    let mut gt = Vec::new();
    let mut bt = Vec::new();
    let mut lv = vec![ZERO; nt];
    for (id, (g, b, bhat, l)) in blocks.iter().enumerate() {
        let to = test_off[id];
        for i in 0..g.dim() {
            lv[to + i] = l[i];
            for j in 0..g.dim() {
                gt.push((to + i, to + j, g.matrix()[(i, j)]));
            }
            for j in 0..b.ncols() {
                bt.push((to + i, field_off[id] + j, b[(i, j)]));
            }
            for (a, row) in layout.rows(id).iter().enumerate() {
                for (dof, c) in row {
                    bt.push((to + i, nf + dof, bhat[(i, a)] * *c));
                }
            }
        }
    }
    let gm = CsrMatrix::from_triplets(nt, nt, gt);
    let bm = CsrMatrix::from_triplets(nt, nf + layout.num_dofs(), bt);
    let mut sol: Vec<C64> = fields.coeffs.iter().flatten().copied().collect();
    sol.extend_from_slice(x);
    let bx = bm.mul_vec(&sol);
    let r: Vec<C64> = lv.iter().zip(&bx).map(|(a, b)| a - b).collect();

    let comps = components(&gm);
    let mut total = 0.0;
    for comp in comps {
        let sub = gm.principal_submatrix(&comp);
        let f = cholesky_of(&sub).map_err(|_| DpgError::GramNotPositiveDefinite)?;
        let mut rc: Vec<C64> = comp.iter().map(|&i| r[i]).collect();
        f.forward_in_place(&mut rc);
        total += rc.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    Ok(total)
}

/// Connected components of the sparsity graph, each sorted.
fn components(m: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let c = out.len();
        let mut stack = vec![s];
        let mut comp = Vec::new();
        label[s] = c;
        while let Some(i) = stack.pop() {
            comp.push(i);
            for (j, v) in m.row(i) {
                if v != ZERO && label[j] == usize::MAX {
                    label[j] = c;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// L2 errors of pressure and velocity against `exact`, with the L2 norms of
/// the exact fields: `(err_p, err_u, norm_p, norm_u)`.
pub fn field_l2_error(mesh: &Mesh, fields: &FieldSolution, exact: impl Fn([f64; 2]) -> FieldValue + Sync) -> (f64, f64, f64, f64) {
    let parts: Vec<[f64; 4]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|id| {
            let el = mesh.element(id);
            let n = el.order + 6;
            let (xs, ws) = gauss_legendre(n);
            let mut acc = [0.0; 4];
            for (a, wa) in xs.iter().zip(&ws) {
                for (b, wb) in xs.iter().zip(&ws) {
                    let w = wa * wb * 0.25 * el.h * el.h;
                    let (p, u) = fields.eval(id, [*a, *b]);
                    let (pe, ue) = exact(el.to_physical([*a, *b]));
                    acc[0] += w * (p - pe).norm_sqr();
                    acc[1] += w * ((u[0] - ue[0]).norm_sqr() + (u[1] - ue[1]).norm_sqr());
                    acc[2] += w * pe.norm_sqr();
                    acc[3] += w * (ue[0].norm_sqr() + ue[1].norm_sqr());
                }
            }
            acc
        })
        .collect();
    let mut s = [0.0; 4];
    for p in parts {
        for i in 0..4 {
            s[i] += p[i];
        }
    }
    (s[0].sqrt(), s[1].sqrt(), s[2].sqrt(), s[3].sqrt())
}

/// Continuous trace and (for interior points) normal flux, with respect to
/// the global edge normal, at a point of the skeleton.
pub fn trace_at(mesh: &Mesh, layout: &DofLayout, x: &[C64], point: [f64; 2]) -> Option<(C64, Option<C64>)> {
    let tol = 1e-13;
    for (id, el) in mesh.elements().iter().enumerate() {
        let (x0, y0) = (el.origin[0], el.origin[1]);
        let (x1, y1) = (x0 + el.h, y0 + el.h);
        if point[0] < x0 - tol || point[0] > x1 + tol || point[1] < y0 - tol || point[1] > y1 + tol {
            continue;
        }
        let side_t = [
            ((point[1] - y0).abs() < tol).then(|| point[0]),
            ((point[0] - x1).abs() < tol).then(|| point[1]),
            ((point[1] - y1).abs() < tol).then(|| point[0]),
            ((point[0] - x0).abs() < tol).then(|| point[1]),
        ];
        for (s, along) in side_t.iter().enumerate() {
            let Some(c) = along else { continue };
            let start = if s % 2 == 0 { x0 } else { y0 };
            let t = -1.0 + 2.0 * (c - start) / el.h;
            let local = layout.local(id);
            let lx = layout.gather(id, x);
            let p = local.eval_h1_side(&lx, s, t);
            let f = local.eval_flux_side(&lx, s, t);
            return Some((p, f));
        }
    }
    None
}
