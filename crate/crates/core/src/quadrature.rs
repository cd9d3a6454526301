//! Simpson-rule quadrature: composite, cumulative and adaptive variants.

/// Composite Simpson rule with `panels` panels on `[a, b]`, each panel
/// sampled at its ends and midpoint.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels > 0);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    let mut left = f(a);
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let right = f(x0 + h);
        sum += left + 4.0 * f(x0 + 0.5 * h) + right;
        left = right;
    }
    sum * h / 6.0
}

/// Running integral `∫_a^{x_j} f` at the uniform nodes `x_j = a + j h`,
/// `j = 0..=cells`, using one Simpson panel per cell.
pub fn cumulative_simpson<F: Fn(f64) -> f64>(f: F, a: f64, h: f64, cells: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cells + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut left = f(a);
    for k in 0..cells {
        let x0 = a + k as f64 * h;
        let right = f(a + (k + 1) as f64 * h);
        acc += (left + 4.0 * f(x0 + 0.5 * h) + right) * h / 6.0;
        out.push(acc);
        left = right;
    }
    out
}

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `tol` is an absolute error target for the whole interval; recursion is
/// capped at `max_depth` levels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, fa, m, fm, b, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let f = |x: f64| 3.0 * x * x * x - x + 2.0;
        let exact = 0.75 * 16.0 - 2.0 + 4.0;
        assert!((composite_simpson(f, 0.0, 2.0, 1) - exact).abs() < 1e-13);
    }

    #[test]
    fn cumulative_matches_composite_at_every_node() {
        let f = |x: f64| (2.0 * x).sin();
        let table = cumulative_simpson(f, 0.0, 0.01, 100);
        for j in [1usize, 17, 100] {
            let direct = composite_simpson(f, 0.0, j as f64 * 0.01, j);
            assert!((table[j] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let f = |x: f64| x.exp();
        let exact = 1f64.exp() - 1.0;
        let e1 = (composite_simpson(f, 0.0, 1.0, 8) - exact).abs();
        let e2 = (composite_simpson(f, 0.0, 1.0, 16) - exact).abs();
        assert!(e1 / e2 > 15.0 && e1 / e2 < 17.0);
    }

    #[test]
    fn adaptive_reaches_tolerance() {
        let v = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 50);
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }
}
