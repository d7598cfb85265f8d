use nalgebra::{DMatrix, DVector};

use super::layout::{LocalLayout, SIDE_CORNERS};
use super::{DpgError, ProblemConfig};
use crate::la::{cholesky_of, CholeskyFactor, DMat, DVec, HermitianDense, C64};
use crate::mesh::Element;
use crate::shape::poly1d::{gauss_legendre, h1_1d, legendre};
use crate::shape::{edge_point, outward_normal, H1Basis, HdivBasis, L2Basis};

const I: C64 = C64::new(0.0, 1.0);

/// Axis-aligned square element `origin + [0, h]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    pub h: f64,
}

impl ElementGeometry {
    pub fn unit() -> Self {
        Self { origin: [0.0, 0.0], h: 1.0 }
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.h * (xi[0] + 1.0),
            self.origin[1] + 0.5 * self.h * (xi[1] + 1.0),
        ]
    }
}

impl From<&Element> for ElementGeometry {
    fn from(e: &Element) -> Self {
        Self { origin: e.origin, h: e.h }
    }
}

/// Number of scalar field unknowns `(p, u_x, u_y)` of an order-`p` element;
/// each component is a tensor polynomial of degree `p - 1`.
pub fn field_dim(p: usize) -> usize {
    3 * p * p
}

/// Dimension of the enriched test space `H1_r x RT_r`.
pub fn test_dim(p_test: usize) -> usize {
    H1Basis::new(p_test).dim() + HdivBasis::new(p_test).dim()
}

/// Tensor Gauss rule on the reference square.
fn quad2d(n: usize) -> Vec<([f64; 2], f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(([x[i], x[j]], w[i] * w[j]));
        }
    }
    out
}

/// Gram matrix of the adjoint graph norm
/// `|iwq + div v|^2 + |grad q + iwv|^2 + alpha (|q|^2 + |v|^2)`.
pub fn element_gram(cfg: &ProblemConfig, geom: &ElementGeometry, p_test: usize) -> HermitianDense {
    element_gram_with_points(cfg, geom, p_test, p_test + 2)
}

pub(crate) fn element_gram_with_points(cfg: &ProblemConfig, geom: &ElementGeometry, p_test: usize, npts: usize) -> HermitianDense {
    assert!(npts >= p_test + 2, "quadrature too coarse for test order {p_test}");
    let hq = H1Basis::new(p_test);
    let hv = HdivBasis::new(p_test);
    let (nq, nv) = (hq.dim(), hv.dim());
    let k = cfg.wavenumber();
    let sa = cfg.alpha.sqrt();
    let jac = 2.0 / geom.h;
    let pts = quad2d(npts);
    let mut y = DMatrix::<C64>::zeros(6 * pts.len(), nq + nv);
    for (pi, (xi, w)) in pts.iter().enumerate() {
        let sw = (w * 0.25 * geom.h * geom.h).sqrt();
        let r = 6 * pi;
        let eq = hq.eval(*xi);
        for j in 0..nq {
            let (q, g) = (eq.values[j], eq.grads[j]);
            y[(r, j)] = I * k * q * sw;
            y[(r + 1, j)] = C64::new(jac * g[0] * sw, 0.0);
            y[(r + 2, j)] = C64::new(jac * g[1] * sw, 0.0);
            y[(r + 3, j)] = C64::new(sa * q * sw, 0.0);
        }
        let ev = hv.eval(*xi);
        for j in 0..nv {
            let (v, d) = (ev.values[j], ev.divs[j]);
            let c = nq + j;
            y[(r, c)] = C64::new(jac * d * sw, 0.0);
            y[(r + 1, c)] = I * k * v[0] * sw;
            y[(r + 2, c)] = I * k * v[1] * sw;
            y[(r + 4, c)] = C64::new(sa * v[0] * sw, 0.0);
            y[(r + 5, c)] = C64::new(sa * v[1] * sw, 0.0);
        }
    }
    HermitianDense::symmetrized(y.ad_mul(&y))
}

/// Field block `B`, trace block `Bhat` (columns in the element's local trace
/// layout, impedance relation substituted on boundary sides) and load `l`.
pub fn element_forms(
    cfg: &ProblemConfig,
    geom: &ElementGeometry,
    p: usize,
    p_test: usize,
    local: &LocalLayout,
) -> (DMat, DMat, DVec) {
    let hq = H1Basis::new(p_test);
    let hv = HdivBasis::new(p_test);
    let lf = L2Basis::new(p - 1);
    let (nq, nv, nf) = (hq.dim(), hv.dim(), lf.dim());
    let k = cfg.wavenumber();
    let jac = 2.0 / geom.h;
    let npts = p_test + 2;

    let mut b = DMatrix::<C64>::zeros(nq + nv, 3 * nf);
    for (xi, w) in quad2d(npts) {
        let dx = w * 0.25 * geom.h * geom.h;
        let eq = hq.eval(xi);
        let ev = hv.eval(xi);
        let f = lf.eval(xi);
        for (j, fj) in f.iter().enumerate() {
            let fw = fj * dx;
            for i in 0..nq {
                // (iwp, q) and -(u, grad q)
                b[(i, j)] += I * k * eq.values[i] * fw;
                b[(i, nf + j)] -= C64::new(jac * eq.grads[i][0] * fw, 0.0);
                b[(i, 2 * nf + j)] -= C64::new(jac * eq.grads[i][1] * fw, 0.0);
            }
            for i in 0..nv {
                // -(p, div v) and (iwu, v)
                let r = nq + i;
                b[(r, j)] -= C64::new(jac * ev.divs[i] * fw, 0.0);
                b[(r, nf + j)] += I * k * ev.values[i][0] * fw;
                b[(r, 2 * nf + j)] += I * k * ev.values[i][1] * fw;
            }
        }
    }

    let mut bhat = DMatrix::<C64>::zeros(nq + nv, local.dim);
    let mut l = DVector::<C64>::zeros(nq + nv);
    let zinv = 1.0 / cfg.impedance;
    let signs = [-1.0, 1.0, 1.0, -1.0];
    for s in 0..4 {
        let ps = local.side_orders[s];
        let n = outward_normal(s);
        let ds = 0.5 * geom.h;
        let (ts, ws) = gauss_legendre(npts);
        // continuous trace functions on the side and their local indices
        let mut h1_cols = vec![SIDE_CORNERS[s].0, SIDE_CORNERS[s].1];
        h1_cols.extend((2..=ps).map(|kk| local.bubble(s, kk)));
        for (t, w) in ts.iter().zip(&ws) {
            let xi = edge_point(s, *t);
            let eq = hq.eval(xi);
            let ev = hv.eval(xi);
            let (phat, _) = h1_1d(ps, *t);
            let wt = w * ds;
            for (a, col) in h1_cols.iter().enumerate() {
                let pw = phat[a] * wt;
                for i in 0..nv {
                    let vn = ev.values[i][0] * n[0] + ev.values[i][1] * n[1];
                    bhat[(nq + i, *col)] += C64::new(vn * pw, 0.0);
                }
                if local.boundary[s] {
                    for i in 0..nq {
                        bhat[(i, *col)] += C64::new(zinv * eq.values[i] * pw, 0.0);
                    }
                }
            }
            if let Some(off) = local.flux_offset[s] {
                let leg = legendre(ps - 1, *t);
                for m in 0..ps {
                    let c = signs[s] * leg[m] * wt;
                    for i in 0..nq {
                        bhat[(i, off + m)] += C64::new(c * eq.values[i], 0.0);
                    }
                }
            }
        }
        if local.boundary[s] && !cfg.load.is_zero() {
            let nl = npts + 4 + (k * geom.h).ceil() as usize;
            let (tl, wl) = gauss_legendre(nl);
            for (t, w) in tl.iter().zip(&wl) {
                let xi = edge_point(s, *t);
                let u0 = cfg.load.eval(k, cfg.impedance, geom.to_physical(xi), n) * (w * ds);
                let eq = hq.eval(xi);
                for i in 0..nq {
                    l[i] += u0 * eq.values[i];
                }
            }
        }
    }
    (b, bhat, l)
}

/// Static condensation data for recovering fields from traces:
/// `fields = offset - map * traces`.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub map: DMat,
    pub offset: DVec,
}

impl Recovery {
    pub fn recover(&self, traces: &[C64]) -> Vec<C64> {
        let t = DVector::from_column_slice(traces);
        (&self.offset - &self.map * t).as_slice().to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct Condensed {
    pub acond: HermitianDense,
    pub lcond: DVec,
    pub recovery: Recovery,
}

/// Eliminates the field block from the normal equations
/// `[B Bhat]^H G^{-1} [B Bhat]`.
pub fn condense(g: &HermitianDense, b: &DMat, bhat: &DMat, l: &DVec) -> Result<Condensed, DpgError> {
    let lg = cholesky_of(g.matrix()).map_err(|_| DpgError::GramNotPositiveDefinite)?;
    condense_with_factor(&lg, b, bhat, l)
}

pub(crate) fn condense_with_factor(lg: &CholeskyFactor, b: &DMat, bhat: &DMat, l: &DVec) -> Result<Condensed, DpgError> {
    let nf = b.ncols();
    let nt = bhat.ncols();
    let wf = lg.forward_mat(b);
    let wt = lg.forward_mat(bhat);
    let mut y = l.clone();
    lg.forward_in_place(y.as_mut_slice());
    let mff = wf.ad_mul(&wf);
    let mft = wf.ad_mul(&wt);
    let mtt = wt.ad_mul(&wt);
    let rf = wf.ad_mul(&y);
    let rt = wt.ad_mul(&y);
    let lf = cholesky_of(&mff).map_err(|_| DpgError::SingularFieldBlock)?;
    let map = lf.solve_mat(&mft);
    let offset = lf.solve_mat(&DMatrix::from_column_slice(nf, 1, rf.as_slice()));
    let acond = &mtt - mft.ad_mul(&map);
    let lcond = DMatrix::from_column_slice(nt, 1, rt.as_slice()) - mft.ad_mul(&offset);
    debug_assert_eq!(map.shape(), (nf, nt));
    Ok(Condensed {
        acond: HermitianDense::symmetrized(acond),
        lcond: DVector::from_column_slice(lcond.as_slice()),
        recovery: Recovery { map, offset: DVector::from_column_slice(offset.as_slice()) },
    })
}

/// All element-level matrices of the discretization.
#[derive(Debug, Clone)]
pub struct ElementSystem {
    pub g: HermitianDense,
    pub b: DMat,
    pub bhat: DMat,
    pub l: DVec,
    pub acond: HermitianDense,
    pub lcond: DVec,
    pub recovery: Recovery,
}

pub fn element_system(cfg: &ProblemConfig, geom: &ElementGeometry, p: usize, local: &LocalLayout) -> Result<ElementSystem, DpgError> {
    let pt = p + cfg.delta_p;
    let g = element_gram(cfg, geom, pt);
    let (b, bhat, l) = element_forms(cfg, geom, p, pt, local);
    let c = condense(&g, &b, &bhat, &l)?;
    Ok(ElementSystem { g, b, bhat, l, acond: c.acond, lcond: c.lcond, recovery: c.recovery })
}

/// Squared residual `|L^{-1}(l - B f - Bhat t)|^2` of an element.
pub(crate) fn residual_sq(lg: &CholeskyFactor, b: &DMat, bhat: &DMat, l: &DVec, f: &[C64], t: &[C64]) -> f64 {
    let mut r = l - b * DVector::from_column_slice(f) - bhat * DVector::from_column_slice(t);
    lg.forward_in_place(r.as_mut_slice());
    r.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpg::BoundaryLoad;
    use std::f64::consts::PI;

    fn cfg(omega: f64) -> ProblemConfig {
        ProblemConfig::new(omega)
    }

    fn interior_layout(p: usize) -> LocalLayout {
        LocalLayout::new([p; 4], [false; 4])
    }

    #[test]
    fn gram_decouples_at_zero_frequency() {
        let mut c = cfg(1.0);
        c.omega = 0.0;
        let g = element_gram(&c, &ElementGeometry::unit(), 3);
        let nq = H1Basis::new(3).dim();
        let m = g.matrix();
        for i in 0..nq {
            for j in nq..m.ncols() {
                assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn gram_matches_overintegration() {
        let c = cfg(2.0 * PI);
        let geom = ElementGeometry { origin: [0.25, 0.5], h: 0.25 };
        let g = element_gram(&c, &geom, 3);
        let g2 = element_gram_with_points(&c, &geom, 3, 10);
        let d = (g.matrix() - g2.matrix()).norm() / g2.matrix().norm();
        assert!(d < 1e-12, "{d}");
        assert!(crate::la::hermitian_cholesky(&g).is_ok());
    }

    #[test]
    fn constant_pressure_column() {
        let c = cfg(1.0);
        let geom = ElementGeometry::unit();
        let (b, _, l) = element_forms(&c, &geom, 1, 2, &interior_layout(1));
        // p = 1 field is the single constant; first column is i (1, q) - (1, div v)
        let hq = H1Basis::new(2);
        let hv = HdivBasis::new(2);
        let (x, w) = gauss_legendre(8);
        for i in 0..hq.dim() {
            let mut m = 0.0;
            for a in 0..8 {
                for bb in 0..8 {
                    m += w[a] * w[bb] * 0.25 * hq.eval([x[a], x[bb]]).values[i];
                }
            }
            assert!((b[(i, 0)] - I * m).norm() < 1e-13);
        }
        for i in 0..hv.dim() {
            let mut d = 0.0;
            for a in 0..8 {
                for bb in 0..8 {
                    d += w[a] * w[bb] * 0.25 * 2.0 * hv.eval([x[a], x[bb]]).divs[i];
                }
            }
            assert!((b[(hq.dim() + i, 0)] + d).norm() < 1e-13);
        }
        assert!(l.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn trace_columns_are_local_to_their_side() {
        let c = cfg(3.0);
        let local = interior_layout(2);
        let (_, bhat, _) = element_forms(&c, &ElementGeometry::unit(), 2, 3, &local);
        let hq = H1Basis::new(3);
        let hv = HdivBasis::new(3);
        // bubble on the bottom side pairs with v_n moments of that side only
        let col = local.bubble(0, 2);
        for i in 0..hv.dim() {
            let v = bhat[(hq.dim() + i, col)];
            let on_bottom = hv.eval([0.3, -1.0]).values[i][1] != 0.0 || hv.eval([-0.7, -1.0]).values[i][1] != 0.0;
            if !on_bottom {
                assert!(v.norm() < 1e-14);
            }
        }
        for i in 0..hq.dim() {
            assert_eq!(bhat[(i, col)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn boundary_load_only_on_boundary_elements() {
        let mut c = cfg(2.0);
        c.load = BoundaryLoad::PlaneWave { direction: [1.0, 0.0] };
        let (_, _, l) = element_forms(&c, &ElementGeometry { origin: [0.25, 0.25], h: 0.25 }, 2, 3, &interior_layout(2));
        assert!(l.iter().all(|v| v.norm() == 0.0));
        let bl = LocalLayout::new([2; 4], [true, false, false, true]);
        let (_, _, l) = element_forms(&c, &ElementGeometry { origin: [0.0, 0.0], h: 0.25 }, 2, 3, &bl);
        assert!(l.norm() > 0.0);
    }

    #[test]
    fn condensation_is_schur_complement() {
        let mut c = cfg(2.0 * PI);
        c.load = BoundaryLoad::PlaneWave { direction: [0.6, 0.8] };
        let local = LocalLayout::new([2; 4], [true; 4]);
        let s = element_system(&c, &ElementGeometry::unit(), 2, &local).unwrap();
        assert!(s.acond.matrix().iter().all(|v| v.is_finite()));
        let ev = s.acond.matrix().clone().symmetric_eigenvalues();
        let scale = s.acond.matrix().norm();
        assert!(ev.min() > -1e-10 * scale);
        let c0 = cfg(2.0 * PI);
        let z = element_system(&c0, &ElementGeometry::unit(), 2, &local).unwrap();
        assert!(z.lcond.norm() == 0.0 && z.recovery.offset.norm() == 0.0);
    }
}
