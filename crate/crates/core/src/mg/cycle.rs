use rayon::prelude::*;

use super::hierarchy::GridLevel;
use super::{Hierarchy, MgError};
use crate::la::{pcg, PcgOptions, PcgOutcome, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// One additive Schwarz step: `damping * sum_i R_i^T A_i^{-1} R_i r` on the
/// level's smoothing space.
pub fn smooth(level: &GridLevel, residual: &[C64]) -> Vec<C64> {
    let parts: Vec<Vec<C64>> = level
        .patches
        .par_iter()
        .map(|p| {
            let mut v: Vec<C64> = p.dofs.iter().map(|&d| residual[d]).collect();
            p.factor.solve_in_place(&mut v);
            v
        })
        .collect();
    let mut out = vec![ZERO; residual.len()];
    for (p, v) in level.patches.iter().zip(parts) {
        for (&d, x) in p.dofs.iter().zip(v) {
            out[d] += x;
        }
    }
    let w = level.damping;
    out.iter_mut().for_each(|x| *x *= w);
    out
}

fn smoothing_steps(level: &GridLevel, b: &[C64], x: &mut [C64], steps: usize) {
    let a = level.smoothing_matrix();
    let mut ax = vec![ZERO; b.len()];
    for _ in 0..steps {
        a.mul_vec_into(x, &mut ax);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        for (xi, ci) in x.iter_mut().zip(smooth(level, &r)) {
            *xi += ci;
        }
    }
}

/// Applies the V-cycle preconditioner of `level` (and all coarser levels)
/// to a residual of that level.
pub fn v_cycle(h: &Hierarchy, level: usize, r: &[C64]) -> Vec<C64> {
    let lv = &h.levels[level];
    let cfg = &h.cycle;
    if level == 0 {
        if let Some(f) = &lv.bottom_factor {
            let mut x = r.to_vec();
            f.solve_in_place(&mut x);
            return x;
        }
        let mut x = vec![ZERO; r.len()];
        smoothing_steps(lv, r, &mut x, cfg.pre_smooth);
        smoothing_steps(lv, r, &mut x, cfg.post_smooth);
        return x;
    }
    let (rm, solved) = lv.condense_residual(r);
    let mut xm = vec![ZERO; rm.len()];
    smoothing_steps(lv, &rm, &mut xm, cfg.pre_smooth);
    let s = lv.smoothing_matrix();
    let sx = s.mul_vec(&xm);
    let res: Vec<C64> = rm.iter().zip(&sx).map(|(a, b)| a - b).collect();
    let inc = lv.inclusion.as_ref().unwrap();
    let rc = inc.adjoint_mul_vec(&res);
    let ec = v_cycle(h, level - 1, &rc);
    for (x, c) in xm.iter_mut().zip(inc.mul_vec(&ec)) {
        *x += c;
    }
    smoothing_steps(lv, &rm, &mut xm, cfg.post_smooth);
    lv.back_substitute(&xm, &solved)
}

/// Preconditioned CG on the finest system with the V-cycle preconditioner.
pub fn solve(h: &Hierarchy, b: &[C64], x0: Option<&[C64]>, opts: &PcgOptions) -> Result<PcgOutcome, MgError> {
    let top = h.num_levels() - 1;
    let a = &h.levels[top].matrix;
    let out = pcg(
        |x, y| a.mul_vec_into(x, y),
        |r, z| z.copy_from_slice(&v_cycle(h, top, r)),
        b,
        x0,
        opts,
    )?;
    Ok(out)
}
