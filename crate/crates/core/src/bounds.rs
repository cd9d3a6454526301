//! A-priori constants for the time-dependent problem and runtime monitors.
//!
//! The constants bound `|U|`, `|U_T|`, the momentum flux, `|U_Y|` and
//! `|U_YY|` uniformly in the regularization. They are built from the
//! initial data, the pressure gradient and `ε₀` only. Each accepted time
//! step is checked against them with a grid allowance of `10h²`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pressure::{b_integral_sup, PressureIntegral, PressureProfile};
use crate::rheology::{critical_shear_rate, flux, flux_max, invert_flux, peak_flux, viscosity_factor, ModelParams, RheologyError};
use crate::steady::{integrate_table, INVERSION_TOL};
use crate::unsteady::{Field, InitialCondition};

/// Sample count for every supremum over `[0, R]`.
pub const SUP_POINTS: usize = 100_000;
/// Cells used to build the unregularized steady profile for the initial-data test.
pub const REFERENCE_CELLS: usize = 4096;
/// Fraction of `ln(η₀/K₅)` used as the run horizon.
pub const LAMBDA_SAFETY: f64 = 0.95;
/// Grid allowance factor, slack is `SLACK_FACTOR · h²`.
pub const SLACK_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("{constant} is not defined here: {reason}")]
    NotApplicable { constant: &'static str, reason: String },
    #[error("flux {zeta} lies outside the invertible range (limit {limit})")]
    RangeError { zeta: f64, limit: f64 },
}

/// Which existence regime governs the time-dependent problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowCase {
    /// `n > 0` or `κ = 0`: global existence.
    Global,
    /// `n = 0`, `κ ≠ 0`: existence on any finite horizon.
    Saturating,
    /// `n < 0`, `κ ≠ 0`: local existence up to `λ`.
    Peaked,
}

impl FlowCase {
    pub fn of(params: &ModelParams) -> Self {
        if params.kappa == 0.0 || params.n > 0.0 {
            FlowCase::Global
        } else if params.n == 0.0 {
            FlowCase::Saturating
        } else {
            FlowCase::Peaked
        }
    }
}

fn grid_points(radius: f64) -> impl Iterator<Item = f64> {
    (0..=SUP_POINTS).map(move |j| if j == SUP_POINTS { radius } else { radius * j as f64 / SUP_POINTS as f64 })
}

pub fn compute_k1(ic: &InitialCondition, profile: &PressureProfile, radius: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for y in grid_points(radius) {
        let ratio = if y < radius {
            ic.value(y).abs() / ((radius - y) * (radius + y))
        } else {
            // Ψ(R) = 0, so the ratio tends to -Ψ'(R)/(2R)
            ic.eval_all(radius).1.abs() / (2.0 * radius)
        };
        sup = sup.max(ratio);
    }
    sup.max(0.5 * profile.b0)
}

pub fn compute_k2(ic: &InitialCondition, profile: &PressureProfile, params: &ModelParams) -> f64 {
    let mut curvature: f64 = 0.0;
    let mut radial: f64 = 0.0;
    for y in grid_points(params.radius) {
        let (_, d1, d2) = ic.eval_all(y);
        curvature = curvature.max((viscosity_factor(d1.abs(), params) * d2).abs());
        let over_y = if y == 0.0 { d2.abs() } else { (d1 / y).abs() };
        radial = radial.max(params.apparent_viscosity(d1) * over_y);
    }
    (curvature + radial + profile.b0) / params.inertia()
}

pub fn compute_k3(k2: f64, profile: &PressureProfile, params: &ModelParams) -> f64 {
    0.5 * profile.b0 + 0.5 * params.inertia() * k2
}

pub fn compute_k4(k3: f64, params: &ModelParams) -> Result<f64, BoundsError> {
    if FlowCase::of(params) != FlowCase::Global {
        return Err(BoundsError::NotApplicable { constant: "K4", reason: "requires n > 0 or kappa = 0".into() });
    }
    let base = k3 * (params.radius + params.eps0);
    if params.kappa == 0.0 {
        return Ok(base);
    }
    Ok(base.max((base * params.kappa.powf(-params.alpha)).powf(1.0 / params.n)))
}

/// `F⁻¹(b₀(R+ε₀)/2)`, the gradient cap of the steady problem.
pub fn gradient_cap(profile: &PressureProfile, params: &ModelParams) -> Result<f64, BoundsError> {
    let zeta = 0.5 * profile.b0 * (params.radius + params.eps0);
    invert_flux(zeta, params, INVERSION_TOL).map(|inv| inv.eta).map_err(|e| match e {
        RheologyError::OutOfRange { zeta, limit } => BoundsError::RangeError { zeta, limit },
        other => BoundsError::NotApplicable { constant: "F^-1(b0(R+eps0)/2)", reason: other.to_string() },
    })
}

pub fn compute_k5(ic: &InitialCondition, profile: &PressureProfile, params: &ModelParams) -> Result<f64, BoundsError> {
    let cap = gradient_cap(profile, params)?;
    let (mut sup_b, mut sup_psi): (f64, f64) = (0.0, 0.0);
    for y in grid_points(params.radius) {
        sup_b = sup_b.max(profile.derivative(y).abs());
        sup_psi = sup_psi.max(ic.eval_all(y).1.abs());
    }
    Ok((sup_b / params.inertia()).max(sup_psi).max(cap))
}

fn curvature_numerator(k3: f64, profile: &PressureProfile, params: &ModelParams) -> f64 {
    1.5 * params.inertia() * k3 + 1.5 * profile.b0
}

pub fn compute_k6(params: &ModelParams, profile: &PressureProfile, k3: f64, k4: f64) -> Result<f64, BoundsError> {
    if FlowCase::of(params) != FlowCase::Global {
        return Err(BoundsError::NotApplicable { constant: "K6", reason: "requires n > 0 or kappa = 0".into() });
    }
    let top = curvature_numerator(k3, profile, params);
    if params.kappa != 0.0 && params.n < 1.0 {
        Ok(top / viscosity_factor(k4, params))
    } else {
        Ok(top)
    }
}

/// `horizon` is `T₀` in the saturating case and the run horizon below `λ`
/// in the peaked case.
pub fn compute_k7(params: &ModelParams, profile: &PressureProfile, k3: f64, k5: f64, horizon: f64) -> Result<f64, BoundsError> {
    if FlowCase::of(params) == FlowCase::Global {
        return Err(BoundsError::NotApplicable { constant: "K7", reason: "requires n <= 0 and kappa != 0".into() });
    }
    let phi = viscosity_factor(k5 * horizon.exp(), params);
    if !(phi > 0.0) {
        return Err(BoundsError::NotApplicable { constant: "K7", reason: format!("diffusion coefficient {phi} is not positive at K5 e^T") });
    }
    Ok(curvature_numerator(k3, profile, params) / phi)
}

/// `ln(η₀/K₅)` when `n < 0`, `κ ≠ 0` and `K₅ < η₀`. Admissible horizons are
/// strictly below it.
pub fn compute_lambda(k5: f64, params: &ModelParams) -> Option<f64> {
    critical_shear_rate(params).filter(|&eta0| k5 < eta0).map(|eta0| (eta0 / k5).ln())
}

/// Hypotheses of the existence theory for the active case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub case: FlowCase,
    /// `sup B₀` without regularization.
    pub sup_b0: f64,
    pub threshold: Option<f64>,
    /// `sup B₀` below the flux limit (always true when the range is unbounded).
    pub flux_condition: bool,
    /// `|Ψ| < -V⁰` on `[0, R)`; `None` when `V⁰` does not exist.
    pub initial_below_steady: Option<bool>,
    /// `min (−V⁰ − |Ψ|)/(R − Y)` over the reference grid.
    pub initial_margin: Option<f64>,
    /// `K₅ < η₀`, peaked case only.
    pub gradient_below_critical: Option<bool>,
    /// Whether the linear-in-distance value bound is established.
    pub value_bound_applies: bool,
    pub satisfied: bool,
}

impl HypothesisReport {
    pub fn summary(&self) -> String {
        let mut parts = vec![format!("case {:?}", self.case)];
        if !self.flux_condition {
            parts.push(format!("sup B0 = {} is not below {}", self.sup_b0, self.threshold.unwrap_or(f64::INFINITY)));
        }
        match self.initial_below_steady {
            Some(false) => parts.push(format!("|Psi| < -V0 fails (scaled margin {})", self.initial_margin.unwrap_or(f64::NAN))),
            None if self.case != FlowCase::Global => parts.push("unregularized steady profile unavailable".into()),
            _ => {}
        }
        if self.gradient_below_critical == Some(false) {
            parts.push("K5 is not below the critical shear rate".into());
        }
        parts.join("; ")
    }
}

/// Tests `|Ψ(Y)| < -V⁰(Y)` on `[0, R)` with `V⁰` the steady profile at
/// `ε = 0`. Returns `(holds, min (−V⁰ − |Ψ|)/(R − Y))`.
pub fn initial_below_steady(ic: &InitialCondition, profile: &PressureProfile, params: &ModelParams) -> Option<(bool, f64)> {
    let table = PressureIntegral::tabulate(profile, 0.0, params.radius, 2 * REFERENCE_CELLS);
    let v0 = integrate_table(params, &table, None).ok()?.v;
    let h = params.radius / REFERENCE_CELLS as f64;
    let mut holds = true;
    let mut margin = f64::INFINITY;
    for (i, &v) in v0.iter().enumerate().take(REFERENCE_CELLS) {
        let y = i as f64 * h;
        let gap = -v - ic.value(y).abs();
        holds &= gap > 0.0;
        margin = margin.min(gap / (params.radius - y));
    }
    Some((holds, margin))
}

pub fn hypothesis_report(ic: &InitialCondition, profile: &PressureProfile, params: &ModelParams, k5: Option<f64>) -> HypothesisReport {
    let case = FlowCase::of(params);
    let (sup_b0, _) = b_integral_sup(0.0, profile, params.radius);
    let threshold = flux_max(params).limit();
    let flux_condition = threshold.is_none_or(|t| sup_b0 < t);
    let lemma_case = match case {
        FlowCase::Global => params.kappa != 0.0 && params.n > 0.0 && params.n < 1.0,
        _ => flux_condition,
    };
    let below = if lemma_case { initial_below_steady(ic, profile, params) } else { None };
    let initial_ok = below.map(|b| b.0);
    let gradient_below_critical =
        (case == FlowCase::Peaked).then(|| matches!((k5, critical_shear_rate(params)), (Some(k), Some(e)) if k < e));
    let value_bound_applies = lemma_case && initial_ok == Some(true);
    let satisfied = match case {
        FlowCase::Global => true,
        FlowCase::Saturating => flux_condition && initial_ok == Some(true),
        FlowCase::Peaked => flux_condition && initial_ok == Some(true) && gradient_below_critical == Some(true),
    };
    HypothesisReport {
        case,
        sup_b0,
        threshold,
        flux_condition,
        initial_below_steady: initial_ok,
        initial_margin: below.map(|b| b.1),
        gradient_below_critical,
        value_bound_applies,
        satisfied,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSet {
    pub case: FlowCase,
    pub b0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: Option<f64>,
    pub k5: Option<f64>,
    pub k6: Option<f64>,
    pub k7: Option<f64>,
    pub eta0: Option<f64>,
    pub zeta0: Option<f64>,
    pub lambda: Option<f64>,
    /// `T₀` (saturating) or `0.95 λ` (peaked).
    pub horizon_cap: Option<f64>,
    /// `F⁻¹(b₀(R+ε₀)/2)` when defined.
    pub gradient_cap: Option<f64>,
    /// Factor in front of the exponential gradient envelope.
    pub envelope_factor: f64,
    /// The parabolic value bound holds for `n ≥ 1` or `κ = 0`.
    pub parabolic_value_bound: bool,
    pub hypotheses: HypothesisReport,
    pub notes: Vec<String>,
}

impl BoundsSet {
    /// `t0_cap` is the horizon used in the saturating case.
    pub fn compute(ic: &InitialCondition, profile: &PressureProfile, params: &ModelParams, t0_cap: f64) -> Self {
        let case = FlowCase::of(params);
        let mut notes = Vec::new();
        let mut keep = |r: Result<f64, BoundsError>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        };
        let k1 = compute_k1(ic, profile, params.radius);
        let k2 = compute_k2(ic, profile, params);
        let k3 = compute_k3(k2, profile, params);
        let k4 = keep(compute_k4(k3, params));
        let k5 = keep(compute_k5(ic, profile, params));
        let gradient_cap = gradient_cap(profile, params).ok();
        let k6 = k4.and_then(|k4| keep(compute_k6(params, profile, k3, k4)));
        let lambda = k5.and_then(|k5| compute_lambda(k5, params));
        let horizon_cap = match case {
            FlowCase::Global => None,
            FlowCase::Saturating => Some(t0_cap),
            FlowCase::Peaked => lambda.map(|l| LAMBDA_SAFETY * l),
        };
        let k7 = match (k5, horizon_cap) {
            (Some(k5), Some(t)) => keep(compute_k7(params, profile, k3, k5, t)),
            _ => None,
        };
        if case == FlowCase::Peaked && lambda.is_none() {
            notes.push("lambda undefined: K5 is not below the critical shear rate".into());
        }
        let hypotheses = hypothesis_report(ic, profile, params, k5);
        Self {
            case,
            b0: profile.b0,
            k1,
            k2,
            k3,
            k4,
            k5,
            k6,
            k7,
            eta0: critical_shear_rate(params),
            zeta0: peak_flux(params),
            lambda,
            horizon_cap,
            gradient_cap,
            envelope_factor: params.inertia().max(1.0),
            parabolic_value_bound: params.kappa == 0.0 || params.n >= 1.0,
            hypotheses,
            notes,
        }
    }
}

/// Outcome of one bound at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// Right-hand side at the tightest point, before slack.
    pub bound: f64,
    pub observed: f64,
    /// `min(bound + slack − observed)` over the checked points.
    pub margin: f64,
    pub location: f64,
    pub passed: bool,
    /// Informational checks are logged but do not affect `passed` of the report.
    pub enforced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
}

impl BoundReport {
    pub fn empty(step: usize, t: f64) -> Self {
        Self { step, t, dt: 0.0, checks: Vec::new(), passed: true }
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub mod names {
    pub const VALUE_PARABOLIC: &str = "value_parabolic";
    pub const WALL_GRADIENT_PARABOLIC: &str = "wall_gradient_parabolic";
    pub const VALUE_LINEAR: &str = "value_linear";
    pub const WALL_GRADIENT_CAP: &str = "wall_gradient_cap";
    pub const TIME_DERIVATIVE: &str = "time_derivative";
    pub const FACE_FLUX: &str = "face_flux";
    pub const GRADIENT_GLOBAL: &str = "gradient_global";
    pub const GRADIENT_ENVELOPE: &str = "gradient_envelope";
    pub const GRADIENT_ENVELOPE_UNIT: &str = "gradient_envelope_unit";
    pub const CURVATURE: &str = "curvature";
}

struct Tracker {
    name: &'static str,
    slack: f64,
    enforced: bool,
    worst: Option<(f64, f64, f64, f64)>,
}

impl Tracker {
    fn new(name: &'static str, slack: f64) -> Self {
        Self { name, slack, enforced: true, worst: None }
    }

    fn informational(mut self) -> Self {
        self.enforced = false;
        self
    }

    fn see(&mut self, bound: f64, observed: f64, location: f64) {
        let m = bound + self.slack - observed;
        if self.worst.is_none_or(|w| m < w.0 || m.is_nan()) {
            self.worst = Some((m, bound, observed, location));
        }
    }

    fn finish(self) -> BoundCheck {
        let (margin, bound, observed, location) = self.worst.unwrap_or((f64::INFINITY, f64::INFINITY, 0.0, 0.0));
        BoundCheck { name: self.name.to_string(), bound, observed, margin, location, passed: margin >= 0.0, enforced: self.enforced }
    }
}

/// Evaluates every bound enabled for the flow case on `field`.
pub fn monitor_bounds(field: &Field, bounds: &BoundsSet, params: &ModelParams) -> BoundReport {
    use names::*;
    let grid = field.grid;
    let n = grid.cells;
    let h = grid.spacing();
    let r = grid.radius;
    let slack = SLACK_FACTOR * h * h;
    let eps = params.eps;
    let u = &field.u;
    let wall_gradient = ((3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h)).abs();
    let mut checks = Vec::new();

    if bounds.parabolic_value_bound {
        let mut t = Tracker::new(VALUE_PARABOLIC, slack);
        for (i, &v) in u.iter().enumerate() {
            let y = grid.node(i);
            t.see(bounds.k1 * (r - y) * (r + y), v.abs(), y);
        }
        checks.push(t.finish());
        let mut t = Tracker::new(WALL_GRADIENT_PARABOLIC, slack);
        t.see(2.0 * bounds.k1 * r, wall_gradient, r);
        checks.push(t.finish());
    }
    if let (true, Some(cap)) = (bounds.hypotheses.value_bound_applies, bounds.gradient_cap) {
        let mut t = Tracker::new(VALUE_LINEAR, slack);
        for (i, &v) in u.iter().enumerate() {
            let y = grid.node(i);
            t.see((r - y) * cap, v.abs(), y);
        }
        checks.push(t.finish());
        let mut t = Tracker::new(WALL_GRADIENT_CAP, slack);
        t.see(cap, wall_gradient, r);
        checks.push(t.finish());
    }
    if field.step_count > 0 {
        let mut t = Tracker::new(TIME_DERIVATIVE, slack);
        for (i, &v) in field.u_t.iter().enumerate() {
            t.see(bounds.k2, v.abs(), grid.node(i));
        }
        checks.push(t.finish());
    }
    let mut t = Tracker::new(FACE_FLUX, slack);
    for (i, &g) in field.u_y.iter().enumerate() {
        let w = grid.face(i) + eps;
        t.see(bounds.k3 * w * w, w * flux(g, params).abs(), grid.face(i));
    }
    checks.push(t.finish());

    if let Some(k4) = bounds.k4 {
        let mut t = Tracker::new(GRADIENT_GLOBAL, slack);
        for (i, &g) in field.u_y.iter().enumerate() {
            t.see(k4, g.abs(), grid.face(i));
        }
        checks.push(t.finish());
    }
    if let (FlowCase::Saturating | FlowCase::Peaked, Some(k5)) = (bounds.case, bounds.k5) {
        let envelope = k5 * field.t.exp();
        let mut scaled = Tracker::new(GRADIENT_ENVELOPE, slack);
        let mut unit = Tracker::new(GRADIENT_ENVELOPE_UNIT, slack).informational();
        for (i, &g) in field.u_y.iter().enumerate() {
            scaled.see(bounds.envelope_factor * envelope, g.abs(), grid.face(i));
            unit.see(envelope, g.abs(), grid.face(i));
        }
        checks.push(scaled.finish());
        checks.push(unit.finish());
    }
    if let Some(k) = bounds.k6.or(bounds.k7) {
        let mut t = Tracker::new(CURVATURE, slack);
        for i in 0..n {
            let d2 = if i == 0 { 2.0 * (u[1] - u[0]) / (h * h) } else { (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) };
            t.see(k, d2.abs(), grid.node(i));
        }
        checks.push(t.finish());
    }
    let passed = checks.iter().all(|c| c.passed || !c.enforced);
    BoundReport { step: field.step_count, t: field.t, dt: 0.0, checks, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unsteady::Grid;

    fn p(n: f64, kappa: f64, beta: f64) -> ModelParams {
        ModelParams::new(n, 2.0, kappa, beta, 1.0).unwrap()
    }

    #[test]
    fn k1_examples() {
        let vanishing = PressureProfile::polynomial(vec![2.0, 0.0, -2.0], 2.0).unwrap();
        assert_eq!(compute_k1(&InitialCondition::zero(), &vanishing, 1.0), 1.0);
        let b = PressureProfile::constant(3.0).unwrap();
        let ic = InitialCondition::compatible_quartic(3.0, 1.0);
        assert_eq!(compute_k1(&ic, &b, 1.0), 1.5);
    }

    #[test]
    fn k2_for_quiescent_start() {
        let b = PressureProfile::polynomial(vec![2.0, 0.0, -2.0], 2.0).unwrap();
        assert!((compute_k2(&InitialCondition::zero(), &b, &p(2.0, 1.0, 0.5)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k3_is_affine() {
        let b = PressureProfile::constant(2.0).unwrap();
        let params = p(2.0, 1.0, 0.5);
        assert_eq!(compute_k3(1.0, &b, &params), 2.0);
        assert!(compute_k3(1.5, &b, &params) > compute_k3(1.0, &b, &params));
    }

    #[test]
    fn k4_k6_gating() {
        let params = p(-1.0, 1.0, 0.5);
        assert!(matches!(compute_k4(1.0, &params), Err(BoundsError::NotApplicable { .. })));
        let linear = p(1.0, 1.0, 0.5);
        let b = PressureProfile::constant(1.0).unwrap();
        let k4 = compute_k4(2.0, &linear).unwrap();
        assert_eq!(k4, 2.0 * 1.01);
        assert_eq!(compute_k6(&linear, &b, 2.0, k4).unwrap(), 12.0 * 0.25 * 2.0 + 1.5);
    }

    #[test]
    fn lambda_example() {
        let params = p(-1.0, 1.0, 0.5);
        assert!((compute_lambda(0.5, &params).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(compute_lambda(1.0, &params).is_none());
        assert!(compute_lambda(0.5, &p(0.5, 1.0, 0.5)).is_none());
    }

    #[test]
    fn initial_field_passes_and_corruption_fails() {
        let params = p(2.0, 1.0, 0.5);
        let b = PressureProfile::constant(1.0).unwrap();
        let ic = InitialCondition::compatible_quartic(1.0, 1.0);
        let set = BoundsSet::compute(&ic, &b, &params, 10.0);
        let grid = Grid::new(64, 1.0);
        let field = Field::from_initial(&ic, grid);
        assert!(monitor_bounds(&field, &set, &params).passed);

        let scale = 10.0 * set.k1;
        let bad = Field::new(grid, 0.0, grid.nodes().iter().map(|y| scale * (1.0 - y * y)).collect());
        let report = monitor_bounds(&bad, &set, &params);
        let c = report.check(names::VALUE_PARABOLIC).unwrap();
        assert!(!c.passed);
        assert_eq!(c.location, 0.0);
    }

    #[test]
    fn zero_field_margin_is_the_bound() {
        let params = p(1.0, 0.0, 0.5);
        let b = PressureProfile::polynomial(vec![1.0, 0.0, -1.0], 1.0).unwrap();
        let set = BoundsSet::compute(&InitialCondition::zero(), &b, &params, 10.0);
        let grid = Grid::new(16, 1.0);
        let report = monitor_bounds(&Field::new(grid, 0.0, vec![0.0; 17]), &set, &params);
        let c = report.check(names::VALUE_PARABOLIC).unwrap();
        // smallest margin is at the wall where the bound vanishes
        let slack = SLACK_FACTOR / 256.0;
        assert!((c.margin - slack).abs() < 1e-15);
    }
}
