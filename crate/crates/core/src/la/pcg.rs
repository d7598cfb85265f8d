use super::{dot, norm2, LaError, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct PcgOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Recompute the true residual `b - A x` every this many iterations.
    pub residual_refresh: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 1000,
            residual_refresh: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    /// `||b - A x_k|| / ||b||` for k = 0, 1, ...
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl PcgOutcome {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// Preconditioned conjugate gradients for Hermitian positive definite systems.
///
/// Stops once `||b - A x|| <= tol ||b||` in the Euclidean norm. `x0 = None`
/// starts from zero. Hitting `max_iter` is reported through
/// `converged = false` with the last iterate.
pub fn pcg<A, M>(
    apply_a: A,
    apply_m: M,
    b: &[C64],
    x0: Option<&[C64]>,
    opts: &PcgOptions,
) -> Result<PcgOutcome, LaError>
where
    A: Fn(&[C64], &mut [C64]),
    M: Fn(&[C64], &mut [C64]),
{
    let n = b.len();
    let mut x = match x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(LaError::DimensionMismatch { expected: n, got: x0.len() });
            }
            x0.to_vec()
        }
        None => vec![ZERO; n],
    };
    let bnorm = norm2(b);
    let mut r = b.to_vec();
    let mut q = vec![ZERO; n];
    if x0.is_some() {
        apply_a(&x, &mut q);
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= qi;
        }
    }
    if bnorm == 0.0 {
        return Ok(PcgOutcome {
            x: vec![ZERO; n],
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
        });
    }
    let mut history = vec![norm2(&r) / bnorm];
    if history[0] <= opts.tol {
        return Ok(PcgOutcome { x, iterations: 0, residual_history: history, converged: true });
    }

    let mut z = vec![ZERO; n];
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    for it in 1..=opts.max_iter {
        apply_a(&p, &mut q);
        let curv = dot(&p, &q).re;
        if !(curv > 0.0) {
            return Err(LaError::BreakdownNonpositiveCurvature(curv, it));
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= q[i] * alpha;
        }
        if opts.residual_refresh > 0 && it % opts.residual_refresh == 0 {
            apply_a(&x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
        }
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= opts.tol {
            return Ok(PcgOutcome { x, iterations: it, residual_history: history, converged: true });
        }
        apply_m(&r, &mut z);
        let rz_new = dot(&r, &z).re;
        if !(rz_new > 0.0) {
            return Err(LaError::BreakdownNonpositiveCurvature(rz_new, it));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    Ok(PcgOutcome { x, iterations: opts.max_iter, residual_history: history, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::{cholesky_solve, hermitian_cholesky, DMat, HermitianDense};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_op(a: &DMat) -> impl Fn(&[C64], &mut [C64]) + '_ {
        move |x, y| {
            let n = a.nrows();
            for i in 0..n {
                y[i] = (0..n).map(|j| a[(i, j)] * x[j]).sum();
            }
        }
    }

    fn seeded_hpd(n: usize, seed: u64) -> DMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        g.adjoint() * &g + DMat::identity(n, n) * C64::new(0.5, 0.0)
    }

    fn seeded_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = seeded_vec(5, 2);
        let id = |x: &[C64], y: &mut [C64]| y.copy_from_slice(x);
        let out = pcg(id, id, &b, None, &PcgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        for (a, b) in out.x.iter().zip(&b) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn exact_preconditioner_one_step() {
        let d = [1.0, 2.0, 3.0];
        let a = |x: &[C64], y: &mut [C64]| (0..3).for_each(|i| y[i] = x[i] * d[i]);
        let m = |x: &[C64], y: &mut [C64]| (0..3).for_each(|i| y[i] = x[i] / d[i]);
        let out = pcg(a, m, &seeded_vec(3, 4), None, &PcgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn unpreconditioned_matches_direct_solve() {
        let a = seeded_hpd(20, 9);
        let b = seeded_vec(20, 10);
        let f = hermitian_cholesky(&HermitianDense::new(a.clone()).unwrap()).unwrap();
        let xd = cholesky_solve(&f, &b).unwrap();
        let opts = PcgOptions { tol: 1e-10, max_iter: 200, residual_refresh: 50 };
        let id = |x: &[C64], y: &mut [C64]| y.copy_from_slice(x);
        let out = pcg(dense_op(&a), id, &b, None, &opts).unwrap();
        assert!(out.converged);
        let err: f64 = out.x.iter().zip(&xd).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * norm2(&xd), "err {err}");
        // finite termination in exact arithmetic; allow a small rounding slack
        assert!(out.iterations <= 25, "iterations {}", out.iterations);
    }

    #[test]
    fn inverse_preconditioner_single_iteration() {
        let a = seeded_hpd(15, 21);
        let f = hermitian_cholesky(&HermitianDense::new(a.clone()).unwrap()).unwrap();
        let m = |x: &[C64], y: &mut [C64]| y.copy_from_slice(&cholesky_solve(&f, x).unwrap());
        let out = pcg(dense_op(&a), m, &seeded_vec(15, 22), None, &PcgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn energy_error_non_increasing() {
        let a = seeded_hpd(12, 31);
        let b = seeded_vec(12, 32);
        let f = hermitian_cholesky(&HermitianDense::new(a.clone()).unwrap()).unwrap();
        let xd = cholesky_solve(&f, &b).unwrap();
        let id = |x: &[C64], y: &mut [C64]| y.copy_from_slice(x);
        let mut last = f64::INFINITY;
        for k in 1..12 {
            let opts = PcgOptions { tol: 0.0, max_iter: k, residual_refresh: 0 };
            let out = pcg(dense_op(&a), id, &b, None, &opts).unwrap();
            let e: Vec<C64> = out.x.iter().zip(&xd).map(|(a, b)| a - b).collect();
            let mut ae = vec![C64::new(0.0, 0.0); 12];
            dense_op(&a)(&e, &mut ae);
            let en = dot(&e, &ae).re.sqrt();
            assert!(en <= last * (1.0 + 1e-9) + 1e-13, "k={k}: {en} > {last}");
            last = en;
        }
    }

    #[test]
    fn indefinite_operator_breaks_down() {
        let a = |x: &[C64], y: &mut [C64]| (0..2).for_each(|i| y[i] = -x[i]);
        let id = |x: &[C64], y: &mut [C64]| y.copy_from_slice(x);
        let b = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(
            pcg(a, id, &b, None, &PcgOptions::default()),
            Err(LaError::BreakdownNonpositiveCurvature(..))
        ));
    }

    #[test]
    fn max_iterations_flagged() {
        let a = seeded_hpd(30, 41);
        let id = |x: &[C64], y: &mut [C64]| y.copy_from_slice(x);
        let opts = PcgOptions { tol: 1e-14, max_iter: 3, residual_refresh: 50 };
        let out = pcg(dense_op(&a), id, &seeded_vec(30, 42), None, &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert_eq!(out.residual_history.len(), 4);
    }
}
