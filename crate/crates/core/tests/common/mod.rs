//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral of an asymmetric-Laplace-shaped density over the real line, split
/// at the mode and truncated where both tails are below `e^-60` of the peak.
pub fn integrate_ald<F: Fn(f64) -> f64>(pdf: F, alpha: f64, lambda: f64, kappa: f64) -> f64 {
    let left = alpha - 60.0 / (lambda * (1.0 - kappa));
    let right = alpha + 60.0 / (lambda * kappa);
    simpson(&pdf, left, alpha, 1e-13) + simpson(&pdf, alpha, right, 1e-13)
}

/// Smallest candidate among `values` minimizing `Σ w_l |v − a_l|`, with its cost.
pub fn brute_force_median(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let cost = |v: f64| -> f64 { values.iter().zip(weights).map(|(a, w)| w * (v - a).abs()).sum() };
    let mut best = (f64::NAN, f64::INFINITY);
    for &a in values {
        let c = cost(a);
        if c < best.1 || (c == best.1 && a < best.0) {
            best = (a, c);
        }
    }
    best
}

/// Real roots of `a x² + b x + c` (a ≠ 0) in ascending order, via the
/// numerically stable `q = −(b + sign(b)·sqrt(disc))/2` form.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a, c / q];
    r.sort_by(f64::total_cmp);
    r
}

/// Minimizes a one-dimensional sum of weighted absolute values
/// `Σ_l c_l |e_l − d_l t|` by evaluating every breakpoint `e_l / d_l`.
pub fn scan_breakpoints(e: &[f64], d: &[f64], c: &[f64]) -> Option<(f64, f64)> {
    let cost = |t: f64| -> f64 { e.iter().zip(d).zip(c).map(|((e, d), c)| c * (e - d * t).abs()).sum() };
    let mut best: Option<(f64, f64)> = None;
    for k in 0..e.len() {
        if d[k] != 0.0 && c[k] > 0.0 {
            let t = e[k] / d[k];
            let v = cost(t);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((t, v));
            }
        }
    }
    best
}
