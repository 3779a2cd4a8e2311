//! Adaptive Simpson quadrature.

use crate::scalar::Scalar;

const MAX_DEPTH: u32 = 50;

/// `∫_a^b f(t) dt` to roughly absolute tolerance `tol`. Works for `b < a`.
pub fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * T::lit(0.5);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[inline]
fn simpson<T: Scalar>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let m = (a + b) * T::lit(0.5);
    let lm = (a + m) * T::lit(0.5);
    let rm = (m + b) * T::lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    let half = tol * T::lit(0.5);
    refine(f, a, m, fa, flm, fm, left, half, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(|t: f64| t * t * t - 2.0 * t, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_negate() {
        let a = adaptive_simpson(|t: f64| t.exp(), 0.0, 1.5, 1e-12);
        let b = adaptive_simpson(|t: f64| t.exp(), 1.5, 0.0, 1e-12);
        assert!((a + b).abs() < 1e-12);
        assert!((a - (1.5f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn log_singularity_near_zero() {
        // ∫_1^x (-1/t) dt = -ln x
        let v = adaptive_simpson(|t: f64| -1.0 / t, 1.0, 1e-6, 1e-10);
        assert!((v - (-(1e-6f64).ln())).abs() < 1e-8, "{v}");
    }
}
