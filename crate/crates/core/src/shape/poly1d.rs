//! One-dimensional building blocks on the reference interval [-1, 1]:
//! Legendre polynomials, the hierarchical (integrated Legendre) H1 basis,
//! Gauss-Legendre rules, and coefficient transfer onto subsegments.

use nalgebra::DMatrix;

/// Values `P_0(t)..P_n(t)`.
pub fn legendre(n: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(t);
    }
    for k in 2..=n {
        let kf = k as f64;
        let v = ((2.0 * kf - 1.0) * t * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        p.push(v);
    }
    p
}

/// Values and derivatives of `P_0..P_n`.
pub fn legendre_with_derivative(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let p = legendre(n, t);
    let mut d = vec![0.0; n + 1];
    // P'_k = P'_{k-2} + (2k-1) P_{k-1}
    for k in 1..=n {
        d[k] = (2 * k - 1) as f64 * p[k - 1] + if k >= 2 { d[k - 2] } else { 0.0 };
    }
    (p, d)
}

/// Gauss-Legendre nodes and weights on [-1, 1] with `n` points.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            let dt = p[n] / d[n];
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        let wt = 2.0 / ((1.0 - t * t) * d[n] * d[n]);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Scale making `phi_k' = s_k P_{k-1}` for the bubble `phi_k`, k >= 2.
#[inline]
pub fn bubble_scale(k: usize) -> f64 {
    ((2 * k - 1) as f64 / 2.0).sqrt()
}

/// Hierarchical H1 basis of degree `p`: `[(1-t)/2, (1+t)/2, phi_2, .., phi_p]`
/// with `phi_k = (P_k - P_{k-2}) / sqrt(2(2k-1))`. Returns values and
/// derivatives.
pub fn h1_1d(p: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let (leg, _) = legendre_with_derivative(p.max(1), t);
    let mut v = Vec::with_capacity(p + 1);
    let mut d = Vec::with_capacity(p + 1);
    v.push(0.5 * (1.0 - t));
    d.push(-0.5);
    v.push(0.5 * (1.0 + t));
    d.push(0.5);
    for k in 2..=p {
        v.push((leg[k] - leg[k - 2]) / (2.0 * (2 * k - 1) as f64).sqrt());
        d.push(bubble_scale(k) * leg[k - 1]);
    }
    (v, d)
}

/// Maps `s` in [-1, 1] onto the subsegment `[a, b]` of the parent interval.
#[inline]
pub fn sub_map(a: f64, b: f64, s: f64) -> f64 {
    a + 0.5 * (b - a) * (s + 1.0)
}

/// `R[m][k]`: coefficient of `P_m(s)` in `P_k(t(s))` where `t(s)` maps onto
/// `[a, b]`. Size `n x n` for modes `0..n`.
pub fn legendre_restriction(n: usize, a: f64, b: f64) -> DMatrix<f64> {
    let (xs, ws) = gauss_legendre(n + 1);
    let mut r = DMatrix::zeros(n, n);
    for (s, w) in xs.iter().zip(&ws) {
        let child = legendre(n.saturating_sub(1), *s);
        let parent = legendre(n.saturating_sub(1), sub_map(a, b, *s));
        for m in 0..n {
            let scale = (2 * m + 1) as f64 / 2.0 * w * child[m];
            for k in 0..n {
                r[(m, k)] += scale * parent[k];
            }
        }
    }
    r
}

/// `T[m-2][k-2]`: coefficient of the child bubble `phi_m(s)` in the
/// restriction of the parent bubble `phi_k` to `[a, b]`, after removing the
/// linear interpolant of its endpoint values. Parent bubbles `2..=p_parent`,
/// child bubbles `2..=p_child`.
pub fn bubble_restriction(p_parent: usize, p_child: usize, a: f64, b: f64) -> DMatrix<f64> {
    let nq = p_parent.max(p_child) + 1;
    let (xs, ws) = gauss_legendre(nq);
    let np = p_parent.saturating_sub(1);
    let nc = p_child.saturating_sub(1);
    let mut t = DMatrix::zeros(nc, np);
    let jac = 0.5 * (b - a);
    for (s, w) in xs.iter().zip(&ws) {
        let (_, dpar) = h1_1d(p_parent, sub_map(a, b, *s));
        let leg = legendre(p_child.max(1), *s);
        for m in 2..=p_child {
            let c = bubble_scale(m) * w * leg[m - 1];
            for k in 2..=p_parent {
                t[(m - 2, k - 2)] += c * dpar[k] * jac;
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn bubbles_vanish_at_endpoints_and_have_parity() {
        for t in [-1.0, 1.0] {
            let (v, _) = h1_1d(7, t);
            for k in 2..=7 {
                assert!(v[k].abs() < 1e-14);
            }
        }
        let (a, _) = h1_1d(6, 0.3);
        let (b, _) = h1_1d(6, -0.3);
        for k in 2..=6 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a[k] - sign * b[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn h1_derivatives_match_finite_differences() {
        let h = 1e-6;
        for t in [-0.77, -0.1, 0.42, 0.9] {
            let (_, d) = h1_1d(6, t);
            let (vp, _) = h1_1d(6, t + h);
            let (vm, _) = h1_1d(6, t - h);
            for k in 0..=6 {
                assert!((d[k] - (vp[k] - vm[k]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn restriction_reproduces_polynomials() {
        let (a, b) = (-0.3, 0.8);
        let r = legendre_restriction(5, a, b);
        let t = bubble_restriction(5, 6, a, b);
        for s in [-0.9, -0.2, 0.55] {
            let leg = legendre(4, s);
            let parent = legendre(4, sub_map(a, b, s));
            for k in 0..5 {
                let v: f64 = (0..5).map(|m| r[(m, k)] * leg[m]).sum();
                assert!((v - parent[k]).abs() < 1e-13);
            }
            let (hc, _) = h1_1d(6, s);
            let (hl, _) = h1_1d(5, sub_map(a, b, s));
            let (ha, _) = h1_1d(5, a);
            let (hb, _) = h1_1d(5, b);
            for k in 2..=5 {
                let lin = ha[k] * hc[0] + hb[k] * hc[1];
                let v: f64 = (2..=6).map(|m| t[(m - 2, k - 2)] * hc[m]).sum();
                assert!((lin + v - hl[k]).abs() < 1e-13);
            }
        }
    }
}
