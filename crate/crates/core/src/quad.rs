//! Adaptive Simpson quadrature.
//!
//! Deliberately independent of the closed forms in [`crate::gauss`]: the
//! check suites integrate the raw integrands and compare against the closed
//! forms, so this module must never call them.

/// Integrate `f` over `[a, b]` to the requested relative tolerance.
///
/// The interval is first swept with a fixed composite pass to anchor the
/// tolerance (a single whole-interval estimate can miss a narrow peak
/// entirely), then each panel is refined by adaptive Simpson with
/// Richardson extrapolation.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    const PANELS: usize = 256;
    let h = (b - a) / PANELS as f64;
    let mut scale = 0.0;
    let mut panel_estimates = [0.0; PANELS];
    for (i, est) in panel_estimates.iter_mut().enumerate() {
        let lo = a + i as f64 * h;
        *est = simpson(f, lo, lo + h);
        scale += est.abs();
    }
    let tol = rel_tol * scale.max(1e-300) / PANELS as f64;
    let mut total = 0.0;
    for (i, est) in panel_estimates.iter().enumerate() {
        let lo = a + i as f64 * h;
        total += adaptive(f, lo, lo + h, *est, tol, 40);
    }
    total
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= 15.0 * tol {
        refined + (refined - whole) / 15.0
    } else {
        adaptive(f, a, m, left, 0.5 * tol, depth - 1)
            + adaptive(f, m, b, right, 0.5 * tol, depth - 1)
    }
}
