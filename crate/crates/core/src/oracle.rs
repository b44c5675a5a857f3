//! Independent reference quadrature used only by the unit tests.

/// Adaptive Simpson with Richardson correction on `[a, b]`. The integrand is
/// never evaluated at the endpoints themselves, so mild endpoint singularities
/// can be removed by substitution beforehand.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let eps = (b - a) * 1e-15;
    let (a, b) = (a + eps, b - eps);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `(1/pi) p.v. int f(y) / (x - y) dy`, folded onto `t = |x - y|` and mapped
/// to the unit interval.
pub fn principal_value(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let g = |u: f64| {
        let t = u / (1.0 - u);
        (f(x - t) - f(x + t)) / t / ((1.0 - u) * (1.0 - u))
    };
    integrate(&g, 0.0, 1.0, 1e-13) / core::f64::consts::PI
}
