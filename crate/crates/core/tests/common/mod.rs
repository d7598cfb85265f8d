//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use dpgmg::dpg::{
    assemble_global, element_forms, element_gram, field_dim, trace_at, BoundaryLoad, DofLayout, ElementGeometry,
    ElementOperator, ProblemConfig,
};
use dpgmg::la::{dot, CsrMatrix, DMat, C64};
use dpgmg::mesh::{MarkedSet, Mesh, RefineKind};
use dpgmg::mg::{v_cycle, CoarseOpMode, CycleConfig, Hierarchy};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn plane_wave_cfg(omega: f64) -> ProblemConfig {
    ProblemConfig::new(omega).with_load(BoundaryLoad::PlaneWave { direction: [0.6, 0.8] })
}

pub fn relative(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    d / n
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Solves the full normal equations over fields and global traces with
/// explicit Gram inverses. Returns per-element fields and the traces.
pub fn uncondensed(mesh: &Mesh, cfg: &ProblemConfig, layout: &DofLayout) -> (Vec<Vec<C64>>, Vec<C64>) {
    let nfs: Vec<usize> = mesh.elements().iter().map(|e| field_dim(e.order)).collect();
    let nf: usize = nfs.iter().sum();
    let n = nf + layout.num_dofs();
    let mut m = DMat::zeros(n, n);
    let mut r = DVector::<C64>::zeros(n);
    let mut off = 0;
    for (id, el) in mesh.elements().iter().enumerate() {
        let geom = ElementGeometry::from(el);
        let pt = el.order + cfg.delta_p;
        let g = element_gram(cfg, &geom, pt);
        let (b, bhat, l) = element_forms(cfg, &geom, el.order, pt, layout.local(id));
        // full operator over [element fields | all traces]
        let mut w = DMat::zeros(g.dim(), n);
        for i in 0..g.dim() {
            for j in 0..b.ncols() {
                w[(i, off + j)] = b[(i, j)];
            }
            for (a, row) in layout.rows(id).iter().enumerate() {
                for (d, c) in row {
                    w[(i, nf + d)] += bhat[(i, a)] * *c;
                }
            }
        }
        let ginv = g.matrix().clone().try_inverse().unwrap();
        m += w.adjoint() * &ginv * &w;
        r += w.adjoint() * &ginv * &l;
        off += nfs[id];
    }
    let sol = m.lu().solve(&r).unwrap();
    let mut fields = Vec::new();
    let mut off = 0;
    for k in &nfs {
        fields.push(sol.as_slice()[off..off + k].to_vec());
        off += k;
    }
    (fields, sol.as_slice()[nf..].to_vec())
}

pub type Step = dyn Fn(&Mesh) -> Mesh;

pub fn uniform_h(m: &Mesh) -> Mesh {
    m.refine_uniform_h().unwrap()
}

pub fn uniform_p(m: &Mesh) -> Mesh {
    m.refine_uniform_p().unwrap()
}

/// h on even element ids, p on odd ones.
pub fn mixed(m: &Mesh) -> Mesh {
    let n = m.num_elements();
    let marks = (0..n).map(|e| (e, if e % 2 == 0 { RefineKind::H } else { RefineKind::P })).collect();
    m.refine(&MarkedSet::new(marks).unwrap()).unwrap()
}

/// Meshes and per-mesh element operators.
pub fn sequence(steps: &[&Step], p0: usize, omega: f64) -> (Vec<Mesh>, Vec<Vec<ElementOperator>>) {
    let mut meshes = vec![Mesh::initial(p0, 5).unwrap()];
    for s in steps {
        let m = s(meshes.last().unwrap());
        meshes.push(m);
    }
    let ops = meshes.iter().map(|m| assemble_global(m, &plane_wave_cfg(omega)).unwrap().operators).collect();
    (meshes, ops)
}

pub fn hierarchy(meshes: &[Mesh], ops: &[Vec<ElementOperator>], mode: CoarseOpMode, cycle: CycleConfig) -> Hierarchy {
    let n = ops.len();
    Hierarchy::build(meshes, ops[n - 1].clone(), &ops[..n - 1], mode, cycle).unwrap()
}

pub fn rel_dist(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    a.frobenius_distance(b) / b.frobenius_norm()
}

fn skeleton_points(mesh: &Mesh, rng: &mut ChaCha8Rng, per_side: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for el in mesh.elements() {
        for s in &el.sides {
            for _ in 0..per_side {
                pts.push(s.key.point(rng.gen_range(-0.99..0.99)));
            }
        }
    }
    pts
}

/// Largest pointwise gap between each coarse basis function and its
/// prolongation, over random points of the coarse skeleton.
pub fn transfer_deviation(meshes: &[Mesh], ops: &[Vec<ElementOperator>]) -> f64 {
    let h = hierarchy(meshes, ops, CoarseOpMode::Restrict, CycleConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fine = h.finest();
    let coarse = &h.levels[h.num_levels() - 2];
    let pts = skeleton_points(&coarse.mesh, &mut rng, 2);
    let mut worst: f64 = 0.0;
    for j in 0..coarse.dim() {
        let mut e = vec![C64::new(0.0, 0.0); coarse.dim()];
        e[j] = C64::new(1.0, 0.0);
        let xf = fine.prolongate(&e);
        for pt in &pts {
            let (pc, fc) = trace_at(&coarse.mesh, &coarse.layout, &e, *pt).unwrap();
            let (pf, ff) = trace_at(&fine.mesh, &fine.layout, &xf, *pt).unwrap();
            worst = worst.max((pc - pf).norm());
            if let (Some(a), Some(b)) = (fc, ff) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    worst
}

/// Worst relative asymmetry `|(Mx, y) - (x, My)|` and smallest
/// `Re (x, Mx) / |x|^2` over random probes, with the largest
/// `|Im (x, Mx)| / Re (x, Mx)`.
pub fn v_cycle_probe(h: &Hierarchy, seed: u64, samples: usize) -> (f64, f64, f64) {
    let top = h.num_levels() - 1;
    let n = h.finest().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut asym, mut pos, mut imag) = (0.0f64, f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let (x, y) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
        let (mx, my) = (v_cycle(h, top, &x), v_cycle(h, top, &y));
        let (a, b) = (dot(&mx, &y), dot(&x, &my));
        asym = asym.max((a - b).norm() / a.norm().max(b.norm()));
        let q = dot(&x, &mx);
        pos = pos.min(q.re / dot(&x, &x).re);
        imag = imag.max(q.im.abs() / q.re.abs());
    }
    (asym, pos, imag)
}
