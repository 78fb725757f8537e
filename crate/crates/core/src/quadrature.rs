//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to an absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Integrates over consecutive segments `[pts[i], pts[i+1]]`, splitting `tol` evenly.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64], tol: f64) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let per = tol / (pts.len() - 1) as f64;
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], per)).sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
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
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Floor the tolerance near machine precision so tiny panels terminate.
    let floor = 1e-15 * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrands() {
        assert!((integrate(f64::sin, 0.0, PI, 1e-12) - 2.0).abs() < 1e-11);
        assert!((integrate(|x| (-x).exp(), 0.0, 60.0, 1e-12) - 1.0).abs() < 1e-11);
        // ∫_0^{π/2} θ·sin 2θ dθ = π/4
        assert!((integrate(|t| t * (2.0 * t).sin(), 0.0, FRAC_PI_2, 1e-12) - PI / 4.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let a = integrate(|x| x, 0.0, 1.0, 1e-12);
        let b = integrate(|x| x, 1.0, 0.0, 1e-12);
        assert_eq!(a, -b);
    }

    #[test]
    fn pieces_sum() {
        let v = integrate_pieces(|x| x.exp(), &[0.0, 0.3, 1.0], 1e-12);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
    }
}
