use std::f64::consts::PI;

use crate::dpg::{
    assemble_global, element_gram, error_indicators, global_residual_sq, recover_fields, BoundaryLoad, ElementGeometry,
    ProblemConfig,
};
use crate::la::{dot, hermitian_cholesky, norm2, triple_product, HermitianDense, PcgOptions, C64};
use crate::mesh::{MarkedSet, Mesh, RefineKind};
use crate::mg::{solve, v_cycle, CoarseOpMode, CycleConfig, Hierarchy};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn probe(n: usize, seed: f64) -> Vec<C64> {
    (0..n).map(|i| C64::new((seed * (i as f64 + 1.0)).sin(), (seed * 0.7 * (i as f64 + 2.0)).cos())).collect()
}

/// Checks the main invariants on meshes with at most a few dozen elements.
pub fn selftest() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let cfg = ProblemConfig::new(2.0 * PI).with_load(BoundaryLoad::PlaneWave { direction: [0.6, 0.8] });

    let geom = ElementGeometry { origin: [0.0, 0.0], h: 0.25 };
    let g = element_gram(&cfg, &geom, 3);
    let ok = hermitian_cholesky(&g).is_ok();
    out.push(check("gram_positive_definite", ok, format!("dimension {}", g.dim())));

    let m0 = Mesh::initial(2, 4).unwrap();
    let m1 = m0.refine_uniform_h().unwrap();
    let m2 = m1.refine(&MarkedSet::new(vec![(0, RefineKind::H), (3, RefineKind::P)]).unwrap()).unwrap();
    let meshes = [m0, m1, m2];
    let systems: Vec<_> = meshes.iter().map(|m| assemble_global(m, &cfg).unwrap()).collect();
    let top = &systems[2];

    let a = top.matrix.csr().to_dense();
    let dev = crate::la::hermitian_deviation(&a);
    let pd = HermitianDense::new(a).ok().map(|h| hermitian_cholesky(&h).is_ok()).unwrap_or(false);
    out.push(check("global_system_hpd", dev < 1e-12 && pd, format!("hermitian deviation {dev:.2e}")));

    let stored: Vec<_> = systems[..2].iter().map(|s| s.operators.clone()).collect();
    let h = Hierarchy::build(&meshes, top.operators.clone(), &stored, CoarseOpMode::Restrict, CycleConfig::default())
        .unwrap();
    let mut worst: f64 = 0.0;
    for i in 1..h.num_levels() {
        let gal = triple_product(&h.levels[i].transfer_matrix(), &h.levels[i].matrix).unwrap();
        let c = h.levels[i - 1].matrix.csr();
        worst = worst.max(c.frobenius_distance(gal.csr()) / c.frobenius_norm());
    }
    out.push(check("restrict_identity", worst < 1e-12, format!("relative distance {worst:.2e}")));

    let n = h.finest().dim();
    let (x, y) = (probe(n, 0.37), probe(n, 1.13));
    let (mx, my) = (v_cycle(&h, 2, &x), v_cycle(&h, 2, &y));
    let asym = (dot(&x, &my) - dot(&mx, &y)).norm() / (norm2(&x) * norm2(&my));
    let pos = dot(&x, &mx).re > 0.0;
    out.push(check("v_cycle_hpd", asym < 1e-10 && pos, format!("asymmetry {asym:.2e}")));

    let opts = PcgOptions::default();
    let sol = solve(&h, &top.rhs, None, &opts);
    let (ok, detail, x) = match sol {
        Ok(s) => (s.converged && s.final_residual() <= opts.tol, format!("{} iterations", s.iterations), s.x),
        Err(e) => (false, e.to_string(), vec![C64::new(0.0, 0.0); n]),
    };
    out.push(check("multigrid_solve", ok, detail));

    let fields = recover_fields(&meshes[2], top, &x);
    let eta: f64 = error_indicators(&meshes[2], &cfg, &top.layout, &fields, &x).unwrap().iter().sum();
    let glob = global_residual_sq(&meshes[2], &cfg, &top.layout, &fields, &x).unwrap();
    let rel = (eta - glob).abs() / glob;
    out.push(check("indicator_identity", rel < 1e-12, format!("relative gap {rel:.2e}")));

    out.push(check("one_irregular", meshes.iter().all(|m| m.is_one_irregular()), String::new()));
    out
}
