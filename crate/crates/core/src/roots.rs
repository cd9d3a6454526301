//! Safeguarded bracketing root finder.
//!
//! Brent's method: inverse quadratic interpolation and secant steps are
//! accepted only while they stay inside the bracket and shrink it fast
//! enough; otherwise the step falls back to bisection. Convergence is
//! therefore guaranteed on any sign-changing bracket of a continuous
//! function, which matters where the derivative vanishes.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("function is not finite at x = {x}")]
    NotFinite { x: f64 },
    #[error("no convergence after {iterations} iterations (bracket width {width})")]
    MaxIterations { iterations: usize, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Finds a root of `f` in `[a, b]`.
///
/// Iteration stops once the bracket half-width falls below
/// `2 * f64::EPSILON * |x| + xtol / 2` or `f(x)` is exactly zero.
/// Passing `xtol = 0` drives the bracket down to a few ulps.
pub fn brent<F>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<Root, RootError>
where
    F: Fn(f64) -> f64,
{
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(RootError::NotFinite { x })
        }
    };
    let (mut a, mut b) = (a, b);
    let mut fa = eval(a)?;
    let mut fb = eval(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NoSignChange { a, b, fa, fb });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                // inverse quadratic interpolation
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = eval(b)?;
    }
    Err(RootError::MaxIterations { iterations: max_iter, width: (c - b).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 0.0, 100).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flat_tangency_still_converges() {
        // f'(root) = 0 on the right end of the bracket; Newton would stall.
        let r = brent(|x| 1.0 - (1.0 - x).powi(2) - 0.75, 0.0, 1.0, 0.0, 200).unwrap();
        assert!((r.x - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reports_missing_sign_change() {
        let err = brent(|x| x * x + 1.0, -1.0, 1.0, 0.0, 50).unwrap_err();
        assert!(matches!(err, RootError::NoSignChange { .. }));
    }

    #[test]
    fn endpoint_root_is_returned_immediately() {
        let r = brent(|x| x, 0.0, 3.0, 0.0, 10).unwrap();
        assert_eq!(r.x, 0.0);
        assert_eq!(r.iterations, 0);
    }
}
