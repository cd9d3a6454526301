//! Clamped cubic spline (C² interpolant) with derivative access.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::solve_tridiagonal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("a spline needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("abscissae must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("singular spline system")]
    Singular,
}

/// End conditions are first derivatives at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Fits a clamped spline. When an end slope is `None` it is estimated
    /// with a three-point one-sided difference.
    pub fn clamped(x: &[f64], y: &[f64], slope_start: Option<f64>, slope_end: Option<f64>) -> Result<Self, SplineError> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(SplineError::TooFewSamples(n.min(y.len())));
        }
        for i in 0..n {
            if !x[i].is_finite() || !y[i].is_finite() {
                return Err(SplineError::NonFinite(i));
            }
            if i > 0 && x[i] <= x[i - 1] {
                return Err(SplineError::NotIncreasing(i));
            }
        }
        let s0 = slope_start.unwrap_or_else(|| one_sided_slope(x[0], x[1], x[2], y[0], y[1], y[2]));
        let sn = slope_end.unwrap_or_else(|| one_sided_slope(x[n - 1], x[n - 2], x[n - 3], y[n - 1], y[n - 2], y[n - 3]));

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let h0 = x[1] - x[0];
        diag[0] = h0 / 3.0;
        upper[0] = h0 / 6.0;
        rhs[0] = (y[1] - y[0]) / h0 - s0;
        for i in 1..n - 1 {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            lower[i] = hl / 6.0;
            diag[i] = (hl + hr) / 3.0;
            upper[i] = hr / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
        }
        let hn = x[n - 1] - x[n - 2];
        lower[n - 1] = hn / 6.0;
        diag[n - 1] = hn / 3.0;
        rhs[n - 1] = sn - (y[n - 1] - y[n - 2]) / hn;
        let m = solve_tridiagonal(&lower, &diag, &upper, &rhs).ok_or(SplineError::Singular)?;
        Ok(Self { x: x.to_vec(), y: y.to_vec(), m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value, first and second derivative at `t`. Outside the knot range the
    /// end cubic is extended.
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        (v, d1, d2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_all(t).1
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.eval_all(t).2
    }
}

fn one_sided_slope(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    // derivative at x0 of the quadratic through the three points
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let d012 = (d12 - d01) / (x2 - x0);
    d01 + d012 * (x0 - x1)
}
