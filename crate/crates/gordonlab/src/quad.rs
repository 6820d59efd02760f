//! Adaptive Simpson quadrature used by the numeric (non-exact) paths.

/// Result of an adaptive quadrature: value plus an error estimate accumulated
/// from the accepted refinement residuals.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive Simpson on [a, b]. `tol` is the absolute tolerance for the whole
/// interval; it is split proportionally across subintervals. Kinks (e.g. from
/// absolute values) are handled by recursion depth alone, which is fine for
/// the piecewise-analytic integrands used here.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> QuadResult {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut out = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 3,
    };
    rec(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut out);
    out
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut QuadResult,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    out.evaluations += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        out.value += left + right + delta / 15.0;
        out.error_estimate += delta.abs() / 15.0;
        return;
    }
    rec(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1, out);
    rec(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1, out);
}

/// Composite Simpson with a fixed even panel count; used where the caller
/// already controls the partition.
pub fn fixed_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(1) * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
