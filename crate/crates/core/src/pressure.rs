//! Radially varying pressure gradient `b(Y)` and its weighted running mean
//!
//! `B_ε(Y) = (1/(Y+ε)) ∫₀^Y (s+ε) b(s) ds`,
//!
//! which is exactly the momentum flux carried by the steady flow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{adaptive_simpson, cumulative_simpson};
use crate::spline::{CubicSpline, SplineError};

/// Number of cells used for every dense scan over `[0, R]`.
pub const DENSE_CELLS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PressureError {
    #[error("pressure gradient is negative at Y = {y} (b = {value})")]
    NegativePressure { y: f64, value: f64 },
    #[error("pressure gradient exceeds the declared bound at Y = {y} (b = {value} > b0 = {b0})")]
    ExceedsBound { y: f64, value: f64, b0: f64 },
    #[error("pressure gradient vanishes identically")]
    IdenticallyZero,
    #[error("pressure gradient is not twice continuously differentiable near Y = {y}")]
    NotSmooth { y: f64 },
    #[error("tabulated profile covers [{start}, {end}] but the pipe needs [0, {radius}]")]
    DomainNotCovered { start: f64, end: f64, radius: f64 },
    #[error("declared bound b0 = {0} must be positive and finite")]
    InvalidBound(f64),
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error(transparent)]
    Spline(#[from] SplineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    Constant { value: f64 },
    /// Coefficients in ascending powers of `Y`.
    Polynomial { coefficients: Vec<f64> },
    Tabulated { spline: CubicSpline },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureProfile {
    pub shape: ProfileShape,
    /// Declared upper bound `b₀`.
    pub b0: f64,
}

/// Horner evaluation of a polynomial and its first two derivatives.
pub(crate) fn poly_eval(c: &[f64], y: f64) -> (f64, f64, f64) {
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &a in c.iter().rev() {
        d2 = d2 * y + 2.0 * d1;
        d1 = d1 * y + v;
        v = v * y + a;
    }
    (v, d1, d2)
}

impl PressureProfile {
    pub fn constant(value: f64) -> Result<Self, PressureError> {
        Self::with_bound(ProfileShape::Constant { value }, value.max(0.0))
    }

    pub fn polynomial(coefficients: Vec<f64>, b0: f64) -> Result<Self, PressureError> {
        if coefficients.is_empty() {
            return Err(PressureError::EmptyPolynomial);
        }
        Self::with_bound(ProfileShape::Polynomial { coefficients }, b0)
    }

    /// Clamped C² spline through `(Y, b)` samples; end slopes are taken from
    /// one-sided differences of the data.
    pub fn tabulated(y: &[f64], b: &[f64], b0: f64) -> Result<Self, PressureError> {
        let spline = CubicSpline::clamped(y, b, None, None)?;
        Self::with_bound(ProfileShape::Tabulated { spline }, b0)
    }

    fn with_bound(shape: ProfileShape, b0: f64) -> Result<Self, PressureError> {
        if !(b0 > 0.0 && b0.is_finite()) {
            if b0 == 0.0 {
                return Err(PressureError::IdenticallyZero);
            }
            return Err(PressureError::InvalidBound(b0));
        }
        Ok(Self { shape, b0 })
    }

    /// `(b, b', b'')` at `y`.
    pub fn eval_all(&self, y: f64) -> (f64, f64, f64) {
        match &self.shape {
            ProfileShape::Constant { value } => (*value, 0.0, 0.0),
            ProfileShape::Polynomial { coefficients } => poly_eval(coefficients, y),
            ProfileShape::Tabulated { spline } => spline.eval_all(y),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match &self.shape {
            ProfileShape::Constant { value } => *value,
            _ => self.eval_all(y).0,
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.eval_all(y).1
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        self.eval_all(y).2
    }
}

/// Summary of a successful profile validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub samples: usize,
    pub min_value: f64,
    pub max_value: f64,
    pub max_abs_second_derivative: f64,
}

/// Checks `0 ≤ b ≤ b₀`, `b ≢ 0` and a bounded second derivative on a dense grid.
pub fn validate_profile(profile: &PressureProfile, radius: f64) -> Result<ProfileReport, PressureError> {
    if let ProfileShape::Tabulated { spline } = &profile.shape {
        let k = spline.knots();
        let (start, end) = (k[0], k[k.len() - 1]);
        let slack = 1e-12 * radius;
        if start > slack || end < radius - slack {
            return Err(PressureError::DomainNotCovered { start, end, radius });
        }
    }
    let slack = 1e-12 * profile.b0;
    let mut report = ProfileReport {
        samples: DENSE_CELLS + 1,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        max_abs_second_derivative: 0.0,
    };
    for j in 0..=DENSE_CELLS {
        let y = radius * j as f64 / DENSE_CELLS as f64;
        let (v, d1, d2) = profile.eval_all(y);
        if !(v.is_finite() && d1.is_finite() && d2.is_finite()) {
            return Err(PressureError::NotSmooth { y });
        }
        if v < -slack {
            return Err(PressureError::NegativePressure { y, value: v });
        }
        if v > profile.b0 + slack {
            return Err(PressureError::ExceedsBound { y, value: v, b0: profile.b0 });
        }
        report.min_value = report.min_value.min(v);
        report.max_value = report.max_value.max(v);
        report.max_abs_second_derivative = report.max_abs_second_derivative.max(d2.abs());
    }
    if report.max_value <= 0.0 {
        return Err(PressureError::IdenticallyZero);
    }
    Ok(report)
}

/// `B_ε(Y)` by adaptive quadrature. `ε = 0` is allowed and gives the
/// unregularized mean `B₀` with `B₀(0) = 0`.
pub fn b_integral(y: f64, eps: f64, profile: &PressureProfile) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    weighted_integral(0.0, y, eps, profile) / (y + eps)
}

/// `∫_a^b (s+ε) b(s) ds` to roughly 1e-13 relative accuracy.
pub fn weighted_integral(a: f64, b: f64, eps: f64, profile: &PressureProfile) -> f64 {
    if let ProfileShape::Constant { value } = profile.shape {
        // Integrand is linear, one Simpson panel is exact.
        let m = 0.5 * (a + b);
        return (b - a) / 6.0 * value * ((a + eps) + 4.0 * (m + eps) + (b + eps));
    }
    let scale = profile.b0 * (b - a) * (b.abs() + eps + 1.0);
    adaptive_simpson(|s| (s + eps) * profile.value(s), a, b, 1e-14 * scale.max(1e-300), 40)
}

/// `B_ε` sampled on a uniform grid together with its supremum over `[0, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureIntegral {
    pub eps: f64,
    pub radius: f64,
    pub cells: usize,
    /// Running weighted integral `∫₀^{Y_j} (s+ε) b(s) ds`.
    pub cumulative: Vec<f64>,
    /// `B_ε(Y_j)`.
    pub samples: Vec<f64>,
    pub sup_value: f64,
    pub sup_location: f64,
}

impl PressureIntegral {
    /// Tabulates with one Simpson panel per cell and locates the supremum by
    /// a scan of the samples followed by golden-section refinement.
    pub fn tabulate(profile: &PressureProfile, eps: f64, radius: f64, cells: usize) -> Self {
        assert!(cells > 0);
        let h = radius / cells as f64;
        let cumulative = cumulative_simpson(|s| (s + eps) * profile.value(s), 0.0, h, cells);
        let samples: Vec<f64> = cumulative
            .iter()
            .enumerate()
            .map(|(j, &c)| if j == 0 { 0.0 } else { c / (j as f64 * h + eps) })
            .collect();
        let (sup_value, sup_location) = refine_sup(&samples, h, radius, eps, profile);
        Self { eps, radius, cells, cumulative, samples, sup_value, sup_location }
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.cells as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.cells {
            self.radius
        } else {
            j as f64 * self.spacing()
        }
    }
}

fn refine_sup(samples: &[f64], h: f64, radius: f64, eps: f64, profile: &PressureProfile) -> (f64, f64) {
    let (k, &best) = samples
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (j, v)| if *v > *acc.1 { (j, v) } else { acc });
    let cells = samples.len() - 1;
    let lo = if k == 0 { 0.0 } else { (k - 1) as f64 * h };
    let hi = if k + 1 >= cells { radius } else { (k + 1) as f64 * h };
    let (y, v) = golden_max(|y| b_integral(y, eps, profile), lo, hi, 1e-12);
    let at_node = if k == cells { radius } else { k as f64 * h };
    if v >= best {
        (v, y)
    } else {
        (best, at_node)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // endpoints may beat the interior when the maximum sits on the boundary
    [(a, f(a)), (b, f(b)), (c, fc), (d, fd)]
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |acc, (y, v)| if v > acc.1 { (y, v) } else { acc })
}

/// `(sup B_ε, argmax)` over `[0, R]`.
pub fn b_integral_sup(eps: f64, profile: &PressureProfile, radius: f64) -> (f64, f64) {
    let table = PressureIntegral::tabulate(profile, eps, radius, DENSE_CELLS);
    (table.sup_value, table.sup_location)
}
