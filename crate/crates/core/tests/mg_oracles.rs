mod common;

use std::f64::consts::PI;

use common::{
    hierarchy, mixed, plane_wave_cfg as cfg, random_vec, rel_dist, sequence, transfer_deviation, uniform_h, uniform_p,
    v_cycle_probe, Step,
};
use dpgmg::dpg::{assemble_global, DofLayout, ElementOperator};
use dpgmg::la::{dot, triple_product, CsrMatrix, DMat, PcgOptions, C64};
use dpgmg::mesh::Mesh;
use dpgmg::mg::{
    build_inclusion, macro_condense, smooth, solve, v_cycle, BottomTreatment, CoarseOpMode, CycleConfig, Hierarchy,
};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn macro_system_of_a_split_element_is_the_dense_schur_complement() {
    let (meshes, ops) = sequence(&[&uniform_h], 2, 2.0 * PI);
    let fine_layout = DofLayout::new(&meshes[1]);
    let md = macro_condense(&meshes[1], &fine_layout, &ops[1], &meshes[0], 1).unwrap();
    // the boundary of the unit square: 8 vertices and 8 edges with one bubble
    assert_eq!(md.num_macro(), 16);
    let a = assemble_global(&meshes[1], &cfg(2.0 * PI)).unwrap().matrix.csr().to_dense();
    let b: Vec<usize> = md.macro_dofs.clone();
    let i: Vec<usize> = (0..a.nrows()).filter(|d| !b.contains(d)).collect();
    let abb = a.select_rows(&b).select_columns(&b);
    let abi = a.select_rows(&b).select_columns(&i);
    let aii = a.select_rows(&i).select_columns(&i);
    let s_ref = &abb - &abi * aii.try_inverse().unwrap() * abi.adjoint();
    let s = md.schur.csr().to_dense();
    assert!((&s - &s_ref).norm() < 1e-12 * s_ref.norm());
    assert!(s.symmetric_eigenvalues().min() > 0.0);
}

#[test]
fn pure_p_step_condenses_nothing_and_injects() {
    let (meshes, ops) = sequence(&[&uniform_h, &uniform_p], 2, 2.0 * PI);
    let fl = DofLayout::new(&meshes[2]);
    let cl = DofLayout::new(&meshes[1]);
    let md = macro_condense(&meshes[2], &fl, &ops[2], &meshes[1], 2).unwrap();
    assert_eq!(md.num_macro(), fl.num_dofs());
    let p = build_inclusion(&meshes[1], &cl, &fl, &md.macro_dofs);
    for j in 0..cl.num_dofs() {
        let target = fl.entities().iter().position(|e| *e == cl.entity(j)).unwrap();
        for i in 0..fl.num_dofs() {
            let expect = if i == target { 1.0 } else { 0.0 };
            assert!((p.get(i, j) - C64::new(expect, 0.0)).norm() < 1e-13);
        }
    }
}

#[test]
fn identical_meshes_give_identity_inclusion() {
    let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap();
    let l = DofLayout::new(&m);
    let md: Vec<usize> = (0..l.num_dofs()).collect();
    let p = build_inclusion(&m, &l, &l, &md);
    assert!(p.frobenius_distance(&CsrMatrix::identity(l.num_dofs())) < 1e-13);
}

fn check_transfer(meshes: &[Mesh], ops: &[Vec<ElementOperator>]) {
    let worst = transfer_deviation(meshes, ops);
    assert!(worst < 1e-12, "max deviation {worst}");
}

#[test]
fn prolongation_reproduces_coarse_traces() {
    let (m, o) = sequence(&[&uniform_h, &uniform_h], 2, 2.0 * PI);
    check_transfer(&m, &o);
    let (m, o) = sequence(&[&uniform_h, &uniform_p], 2, 2.0 * PI);
    check_transfer(&m, &o);
    let (m, o) = sequence(&[&uniform_h, &mixed, &mixed], 2, 2.0 * PI);
    check_transfer(&m, &o);
}

#[test]
fn restricted_operators_are_galerkin_products() {
    let (meshes, ops) = sequence(&[&uniform_h, &mixed, &uniform_h], 2, 8.0 * PI);
    let h = hierarchy(&meshes, &ops, CoarseOpMode::Restrict, CycleConfig::default());
    for i in 1..h.num_levels() {
        let p = h.levels[i].transfer_matrix();
        let galerkin = triple_product(&p, &h.levels[i].matrix).unwrap();
        assert!(rel_dist(h.levels[i - 1].matrix.csr(), galerkin.csr()) < 1e-12);
    }
    let s = hierarchy(&meshes, &ops, CoarseOpMode::Store, CycleConfig::default());
    let top = h.num_levels() - 1;
    assert!(h.levels[top - 1].matrix.csr().frobenius_distance(s.levels[top - 1].matrix.csr()) > 0.0);
}

#[test]
fn store_mode_needs_retained_systems() {
    let (meshes, ops) = sequence(&[&uniform_h], 2, 2.0 * PI);
    let err = Hierarchy::build(&meshes, ops[1].clone(), &[], CoarseOpMode::Store, CycleConfig::default()).unwrap_err();
    assert_eq!(err, dpgmg::mg::MgError::MissingStoredSystem(0));
}

#[test]
fn smoother_is_hermitian_and_exact_on_one_element() {
    let (meshes, ops) = sequence(&[&uniform_h, &uniform_h], 2, 2.0 * PI);
    let h = hierarchy(&meshes, &ops, CoarseOpMode::Restrict, CycleConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let top = h.finest();
    let n = top.smoothing_matrix().dim();
    let (x, y) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
    let (sx, sy) = (smooth(top, &x), smooth(top, &y));
    let (a, b) = (dot(&sx, &y), dot(&x, &sy));
    assert!((a - b).norm() < 1e-12 * a.norm());
    assert!(smooth(top, &vec![C64::new(0.0, 0.0); n]).iter().all(|v| v.norm() == 0.0));

    // every vertex patch of a one-element mesh covers all DOFs
    let bottom = &h.levels[0];
    let r = random_vec(&mut rng, bottom.dim());
    let x = smooth(bottom, &r);
    let ax = bottom.matrix.mul_vec(&x);
    let err: f64 = ax.iter().zip(&r).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
    assert!(err < 1e-10 * dpgmg::la::norm2(&r));
}

#[test]
fn v_cycle_is_hermitian_positive_definite() {
    let steps: [&Step; 3] = [&uniform_h, &uniform_h, &mixed];
    for depth in 1..=3 {
        let (meshes, ops) = sequence(&steps[..depth], 2, 8.0 * PI);
        let h = hierarchy(&meshes, &ops, CoarseOpMode::Restrict, CycleConfig::default());
        let (asym, pos, imag) = v_cycle_probe(&h, depth as u64, 20);
        assert!(asym <= 1e-10 && pos > 0.0 && imag < 1e-10, "{asym} {pos} {imag}");
    }
}

#[test]
fn one_level_exact_bottom_converges_in_one_iteration() {
    let m = Mesh::initial(3, 5).unwrap().refine_uniform_h().unwrap();
    let sys = assemble_global(&m, &cfg(2.0 * PI)).unwrap();
    let cycle = CycleConfig { bottom: BottomTreatment::ExactSolve, ..CycleConfig::default() };
    let h = Hierarchy::build(&[m], sys.operators.clone(), &[], CoarseOpMode::Restrict, cycle).unwrap();
    let out = solve(&h, &sys.rhs, None, &PcgOptions::default()).unwrap();
    assert_eq!(out.iterations, 1);
}

#[test]
fn galerkin_cycle_without_refinement_is_exact() {
    let m = Mesh::initial(2, 5).unwrap().refine_uniform_h().unwrap().refine_uniform_h().unwrap();
    let sys = assemble_global(&m, &cfg(4.0 * PI)).unwrap();
    let cycle = CycleConfig { bottom: BottomTreatment::ExactSolve, ..CycleConfig::default() };
    let h = Hierarchy::build(&[m.clone(), m], sys.operators.clone(), &[], CoarseOpMode::Restrict, cycle).unwrap();
    let x = v_cycle(&h, 1, &sys.rhs);
    let ax = sys.matrix.mul_vec(&x);
    let err: f64 = ax.iter().zip(&sys.rhs).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
    assert!(err <= 1e-10 * dpgmg::la::norm2(&sys.rhs));
}

#[test]
fn two_level_solve_matches_direct_solve() {
    let (meshes, ops) = sequence(&[&uniform_h, &uniform_h], 2, 2.0 * PI);
    let meshes = &meshes[1..];
    let ops = &ops[1..];
    let sys = assemble_global(&meshes[1], &cfg(2.0 * PI)).unwrap();
    let h = hierarchy(meshes, ops, CoarseOpMode::Restrict, CycleConfig::default());
    let out = solve(&h, &sys.rhs, None, &PcgOptions::default()).unwrap();
    assert!(out.converged && out.final_residual() <= 1e-7);
    let a: DMat = sys.matrix.csr().to_dense();
    let x = a.lu().solve(&DVector::from_column_slice(&sys.rhs)).unwrap();
    let d: f64 = out.x.iter().zip(x.iter()).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
    assert!(d <= 1e-6 * x.norm());

    let warm = solve(&h, &sys.rhs, Some(x.as_slice()), &PcgOptions::default()).unwrap();
    assert!(warm.iterations <= 1);
}

/// Coarse meshes with hanging nodes whose large neighbours stay unrefined.
#[test]
fn transfer_across_persisting_hanging_nodes() {
    let corner = |m: &Mesh| m.refine(&dpgmg::mesh::MarkedSet::new(vec![(0, dpgmg::mesh::RefineKind::H)]).unwrap()).unwrap();
    let last_p = |m: &Mesh| {
        let n = m.num_elements();
        m.refine(&dpgmg::mesh::MarkedSet::new(vec![(n - 1, dpgmg::mesh::RefineKind::P)]).unwrap()).unwrap()
    };
    let (meshes, ops) = sequence(&[&uniform_h, &corner, &last_p, &corner], 2, 4.0 * PI);
    assert!(!meshes[2].constrained_edges().is_empty());
    check_transfer(&meshes, &ops);
    let h = hierarchy(&meshes, &ops, CoarseOpMode::Restrict, CycleConfig::default());
    for i in 1..h.num_levels() {
        let galerkin = triple_product(&h.levels[i].transfer_matrix(), &h.levels[i].matrix).unwrap();
        assert!(rel_dist(h.levels[i - 1].matrix.csr(), galerkin.csr()) < 1e-12);
    }
}
