//! Time integration of the regularized momentum equation
//!
//! `8β² U_T = (1/(Y+ε)) ∂_Y[(Y+ε) F(U_Y)] + b(Y)`,  `U_Y(T,0) = 0`, `U(T,R) = 0`.
//!
//! Space is discretized by finite volumes on the uniform nodes `Y_i = i h`.
//! Node `i` owns the cell `[Y_{i-1/2}, Y_{i+1/2}]` (the axis node owns the
//! half cell `[0, h/2]`, whose inner face carries no flux). Cell volumes and
//! sources are exact integrals of `(s+ε)` and `(s+ε) b(s)`, so summing the
//! scheme over cells telescopes exactly. Time stepping is implicit Euler
//! solved by damped Newton with a tridiagonal Jacobian.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{monitor_bounds, BoundReport, BoundsSet, FlowCase, HypothesisReport};
use crate::linalg::solve_tridiagonal;
use crate::pressure::{poly_eval, PressureIntegral, PressureProfile};
use crate::rheology::{critical_shear_rate, flux, flux_derivative, ModelParams};
use crate::spline::{CubicSpline, SplineError};

/// Tolerance for the compatibility conditions, scaled by `max(1, b₀)`.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 25;
const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialShape {
    /// Ascending powers of `Y`.
    Polynomial { coefficients: Vec<f64> },
    Tabulated { spline: CubicSpline },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub shape: InitialShape,
}

impl InitialCondition {
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self { shape: InitialShape::Polynomial { coefficients } }
    }

    pub fn zero() -> Self {
        Self::polynomial(vec![0.0])
    }

    /// `-b(R)(R²-Y²)²/(8R²)`, compatible with any pressure gradient.
    pub fn compatible_quartic(wall_pressure: f64, radius: f64) -> Self {
        let c = -wall_pressure / (8.0 * radius * radius);
        let r2 = radius * radius;
        Self::polynomial(vec![c * r2 * r2, 0.0, -2.0 * c * r2, 0.0, c])
    }

    /// Clamped spline with zero end slopes through `(Y, Ψ)` samples.
    pub fn tabulated(y: &[f64], psi: &[f64]) -> Result<Self, SplineError> {
        Ok(Self { shape: InitialShape::Tabulated { spline: CubicSpline::clamped(y, psi, Some(0.0), Some(0.0))? } })
    }

    /// `(Ψ, Ψ', Ψ'')` at `y`.
    pub fn eval_all(&self, y: f64) -> (f64, f64, f64) {
        match &self.shape {
            InitialShape::Polynomial { coefficients } => poly_eval(coefficients, y),
            InitialShape::Tabulated { spline } => spline.eval_all(y),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval_all(y).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompatibilityCondition {
    /// `Ψ'(0) = 0`.
    AxisSlope,
    /// `Ψ(R) = 0`.
    WallValue,
    /// `Ψ'(R) = 0`.
    WallSlope,
    /// `Ψ''(R) + b(R) = 0`.
    WallCurvature,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitialError {
    #[error("initial data violates {condition:?}: residual {residual}")]
    CompatibilityViolation { condition: CompatibilityCondition, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub axis_slope: f64,
    pub wall_value: f64,
    pub wall_slope: f64,
    pub wall_curvature: f64,
    pub tolerance: f64,
}

pub fn validate_initial(ic: &InitialCondition, profile: &PressureProfile, params: &ModelParams) -> Result<CompatibilityReport, InitialError> {
    let r = params.radius;
    let (_, axis_slope, _) = ic.eval_all(0.0);
    let (wall_value, wall_slope, wall_d2) = ic.eval_all(r);
    let report = CompatibilityReport {
        axis_slope,
        wall_value,
        wall_slope,
        wall_curvature: wall_d2 + profile.value(r),
        tolerance: COMPATIBILITY_TOL * profile.b0.max(1.0),
    };
    for (condition, residual) in [
        (CompatibilityCondition::AxisSlope, report.axis_slope),
        (CompatibilityCondition::WallValue, report.wall_value),
        (CompatibilityCondition::WallSlope, report.wall_slope),
        (CompatibilityCondition::WallCurvature, report.wall_curvature),
    ] {
        if !(residual.abs() <= report.tolerance) {
            return Err(InitialError::CompatibilityViolation { condition, residual });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cells: usize,
    pub radius: f64,
}

impl Grid {
    pub fn new(cells: usize, radius: f64) -> Self {
        assert!(cells >= 2, "grid needs at least 2 cells");
        Self { cells, radius }
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.radius
        } else {
            i as f64 * self.spacing()
        }
    }

    /// Midpoint `Y_{i+1/2}` of cell `i`.
    pub fn face(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub t: f64,
    /// Nodal values; `u[N] = 0`.
    pub u: Vec<f64>,
    /// Difference quotients on the faces `Y_{i+1/2}`.
    pub u_y: Vec<f64>,
    /// Time derivative from the last accepted step (zero initially).
    pub u_t: Vec<f64>,
    pub step_count: usize,
}

impl Field {
    /// Wraps nodal values, forcing the wall value to zero.
    pub fn new(grid: Grid, t: f64, mut u: Vec<f64>) -> Self {
        assert_eq!(u.len(), grid.cells + 1);
        u[grid.cells] = 0.0;
        let u_y = face_gradients(&u, grid.spacing());
        let u_t = vec![0.0; u.len()];
        Self { grid, t, u, u_y, u_t, step_count: 0 }
    }

    pub fn from_initial(ic: &InitialCondition, grid: Grid) -> Self {
        Self::new(grid, 0.0, grid.nodes().iter().map(|&y| ic.value(y)).collect())
    }

    pub fn max_gradient(&self) -> f64 {
        self.u_y.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

fn face_gradients(u: &[f64], h: f64) -> Vec<f64> {
    u.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// Faces where `|U_Y| ≥ η₀ - 1e-12`; empty unless `n < 0` and `κ ≠ 0`.
pub fn detect_degenerate(field: &Field, params: &ModelParams) -> Vec<usize> {
    match critical_shear_rate(params) {
        Some(eta0) => field
            .u_y
            .iter()
            .enumerate()
            .filter(|(_, g)| g.abs() >= eta0 - 1e-12)
            .map(|(i, _)| i)
            .collect(),
        None => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
#[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
pub struct NewtonFailure {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Discretization of the right-hand side on a fixed grid.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub params: ModelParams,
    pub grid: Grid,
    /// `Y_{i+1/2} + ε` for `i = 0..N`.
    face_weight: Vec<f64>,
    /// Cell volumes `∫(s+ε) ds` for the unknown nodes `0..N`.
    volume: Vec<f64>,
    /// Cell sources `∫(s+ε) b(s) ds` for the unknown nodes `0..N`.
    source: Vec<f64>,
    tolerance: f64,
}

impl Scheme {
    pub fn new(params: &ModelParams, profile: &PressureProfile, cells: usize) -> Self {
        let grid = Grid::new(cells, params.radius);
        let h = grid.spacing();
        let eps = params.eps;
        let table = PressureIntegral::tabulate(profile, eps, params.radius, 2 * cells);
        let c = &table.cumulative;
        let face_weight = (0..cells).map(|i| grid.face(i) + eps).collect();
        let mut volume = Vec::with_capacity(cells);
        let mut source = Vec::with_capacity(cells);
        volume.push(h * h / 8.0 + eps * h / 2.0);
        source.push(c[1]);
        for i in 1..cells {
            volume.push(h * (grid.node(i) + eps));
            source.push(c[2 * i + 1] - c[2 * i - 1]);
        }
        Self { params: *params, grid, face_weight, volume, source, tolerance: 1e-10 * (1.0 + profile.b0) }
    }

    /// Newton tolerance on the max-norm residual.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `(Y_f+ε) F(g_f)` on every face.
    pub fn face_fluxes(&self, u: &[f64]) -> Vec<f64> {
        let h = self.grid.spacing();
        (0..self.grid.cells).map(|i| self.face_weight[i] * flux((u[i + 1] - u[i]) / h, &self.params)).collect()
    }

    /// Nodal values of `8β² U_T`; zero at the wall node.
    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.grid.cells + 1);
        let q = self.face_fluxes(u);
        let mut out = vec![0.0; u.len()];
        for i in 0..self.grid.cells {
            let inner = if i == 0 { 0.0 } else { q[i - 1] };
            out[i] = (q[i] - inner + self.source[i]) / self.volume[i];
        }
        out
    }

    /// `Σ w_i RHS_i` over the unknown nodes, which telescopes to the outer
    /// face flux plus the total source.
    pub fn integrated_rhs(&self, u: &[f64]) -> (f64, f64) {
        let r = self.rhs(u);
        let lhs = (0..self.grid.cells).map(|i| self.volume[i] * r[i]).sum();
        let q = self.face_fluxes(u);
        (lhs, q[self.grid.cells - 1] + self.source.iter().sum::<f64>())
    }

    fn residual(&self, u_old: &[f64], delta: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
        let mut u = u_old.to_vec();
        for (ui, d) in u.iter_mut().zip(delta) {
            *ui += d;
        }
        let rhs = self.rhs(&u);
        let m = self.params.inertia() / dt;
        let r = (0..self.grid.cells).map(|i| m * delta[i] - rhs[i]).collect();
        (r, u)
    }

    /// One implicit Euler step by damped Newton on the increment.
    pub fn step(&self, u_old: &[f64], dt: f64) -> Result<StepOutcome, NewtonFailure> {
        let n = self.grid.cells;
        let h = self.grid.spacing();
        let m = self.params.inertia() / dt;
        let mut delta = vec![0.0; n + 1];
        let (mut r, mut u) = self.residual(u_old, &delta, dt);
        let mut norm = max_abs(&r);
        let mut iterations = 0;
        while norm > self.tolerance {
            if iterations == MAX_NEWTON || !norm.is_finite() {
                return Err(NewtonFailure { iterations, residual: norm });
            }
            iterations += 1;
            // conductance of each face, dq_f/d(u_{i+1} - u_i)
            let cond: Vec<f64> =
                (0..n).map(|i| self.face_weight[i] * flux_derivative((u[i + 1] - u[i]) / h, &self.params) / h).collect();
            let mut lower = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 0..n {
                let w = self.volume[i];
                let right = cond[i] / w;
                let left = if i == 0 { 0.0 } else { cond[i - 1] / w };
                diag[i] = m + right + left;
                upper[i] = -right;
                lower[i] = -left;
            }
            let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
            let Some(dir) = solve_tridiagonal(&lower, &diag, &upper, &neg_r) else {
                return Err(NewtonFailure { iterations, residual: norm });
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let trial: Vec<f64> = (0..=n).map(|i| if i < n { delta[i] + lambda * dir[i] } else { 0.0 }).collect();
                let (tr, tu) = self.residual(u_old, &trial, dt);
                let tn = max_abs(&tr);
                if tn.is_finite() && tn < (1.0 - 1e-4 * lambda) * norm || tn <= self.tolerance {
                    delta = trial;
                    r = tr;
                    u = tu;
                    norm = tn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(NewtonFailure { iterations, residual: norm });
            }
        }
        u[n] = 0.0;
        Ok(StepOutcome { u, iterations, residual: norm })
    }

    /// Advances by `dt`, splitting into halves on Newton failure (at most
    /// 20 levels deep).
    pub fn advance(&self, field: &Field, dt: f64) -> Result<Field, NewtonFailure> {
        self.advance_depth(field, dt, 0)
    }

    fn advance_depth(&self, field: &Field, dt: f64, depth: u32) -> Result<Field, NewtonFailure> {
        match self.step(&field.u, dt) {
            Ok(out) => Ok(self.accept(field, out.u, dt)),
            Err(e) if depth >= MAX_HALVINGS => Err(e),
            Err(_) => {
                let mid = self.advance_depth(field, 0.5 * dt, depth + 1)?;
                self.advance_depth(&mid, 0.5 * dt, depth + 1)
            }
        }
    }

    fn accept(&self, field: &Field, u: Vec<f64>, dt: f64) -> Field {
        let u_t = u.iter().zip(&field.u).map(|(a, b)| (a - b) / dt).collect();
        Field {
            grid: self.grid,
            t: field.t + dt,
            u_y: face_gradients(&u, self.grid.spacing()),
            u,
            u_t,
            step_count: field.step_count + 1,
        }
    }

    /// Default first step `1e-3·8β²h²·max(1, 1/Φ_max)` with `Φ_max` taken
    /// over the face gradients of `u`.
    pub fn initial_dt(&self, u: &[f64]) -> f64 {
        let h = self.grid.spacing();
        let phi_max = face_gradients(u, h)
            .iter()
            .map(|g| flux_derivative(*g, &self.params))
            .fold(flux_derivative(0.0, &self.params), f64::max);
        let scale = if phi_max > 0.0 { (1.0 / phi_max).max(1.0) } else { 1.0 };
        1e-3 * self.params.inertia() * h * h * scale
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// `8β² U_T` for nodal values `u` (length `N+1`).
pub fn spatial_operator(u: &[f64], params: &ModelParams, profile: &PressureProfile) -> Vec<f64> {
    Scheme::new(params, profile, u.len() - 1).rhs(u)
}

/// One implicit Euler step of size `dt`.
pub fn advance(field: &Field, dt: f64, params: &ModelParams, profile: &PressureProfile) -> Result<Field, NewtonFailure> {
    Scheme::new(params, profile, field.grid.cells).advance(field, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    /// Starts from `initial` (or the default estimate), doubles after five
    /// consecutive steps needing at most three Newton iterations, halves on
    /// failure.
    Adaptive { initial: Option<f64>, max: f64 },
    Fixed { dt: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive { initial: None, max: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub cells: usize,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub dt: DtPolicy,
    /// Horizon cap for the saturating-flux case.
    pub t0_cap: f64,
    pub override_backward: bool,
    pub override_hypotheses: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cells: 512,
            t_end: 1.0,
            output_times: Vec::new(),
            dt: DtPolicy::default(),
            t0_cap: 10.0,
            override_backward: false,
            override_hypotheses: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTend,
    /// Stopped at the user cap `T₀` (saturating flux).
    ReachedT0Cap,
    /// Stopped at `0.95 λ` (peaked flux).
    ReachedLambda,
    BackwardRegimeDetected,
    NewtonFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub snapshots: Vec<Field>,
    pub monitor_log: Vec<BoundReport>,
    pub termination: Termination,
    pub horizon: f64,
    pub final_field: Field,
    /// Set when integration continued past a backward-regime detection.
    pub non_physical: bool,
    pub rejected_steps: usize,
    pub newton_failure: Option<NewtonFailure>,
}

impl SimulationResult {
    pub fn all_monitors_passed(&self) -> bool {
        self.monitor_log.iter().all(|r| r.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Initial(#[from] InitialError),
    #[error("existence hypotheses fail for this case: {}", .0.summary())]
    Hypotheses(Box<HypothesisReport>),
    #[error("invalid run options: {0}")]
    Options(String),
}

/// Validates the data, computes the a-priori constants, checks the case
/// hypotheses and integrates from `Ψ`.
pub fn run(ic: &InitialCondition, params: &ModelParams, profile: &PressureProfile, options: &RunOptions) -> Result<SimulationResult, RunError> {
    validate_initial(ic, profile, params)?;
    let bounds = BoundsSet::compute(ic, profile, params, options.t0_cap);
    if !bounds.hypotheses.satisfied && !options.override_hypotheses {
        return Err(RunError::Hypotheses(Box::new(bounds.hypotheses.clone())));
    }
    let grid = Grid::new(options.cells, params.radius);
    run_from_field(Field::from_initial(ic, grid), params, profile, options, Some(&bounds))
}

/// Integrates from an arbitrary field. With `bounds` the horizon follows the
/// flow case and every accepted step is monitored; without, the run goes to
/// `t_end` and monitor entries carry no checks.
pub fn run_from_field(
    initial: Field,
    params: &ModelParams,
    profile: &PressureProfile,
    options: &RunOptions,
    bounds: Option<&BoundsSet>,
) -> Result<SimulationResult, RunError> {
    if !(options.t_end > 0.0 && options.t_end.is_finite()) {
        return Err(RunError::Options(format!("t_end must be positive, got {}", options.t_end)));
    }
    if initial.grid.cells != options.cells {
        return Err(RunError::Options("initial field does not match the grid size".into()));
    }
    let (horizon, cap_termination) = match bounds {
        Some(b) => match (b.case, b.horizon_cap) {
            (FlowCase::Saturating, Some(cap)) if cap < options.t_end => (cap, Termination::ReachedT0Cap),
            (FlowCase::Peaked, Some(cap)) if cap < options.t_end => (cap, Termination::ReachedLambda),
            _ => (options.t_end, Termination::ReachedTend),
        },
        None => (options.t_end, Termination::ReachedTend),
    };
    let scheme = Scheme::new(params, profile, options.cells);
    let mut targets: Vec<f64> = options.output_times.iter().copied().filter(|&t| t > 0.0 && t < horizon).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    targets.push(horizon);

    let mut snapshots = Vec::new();
    if options.output_times.contains(&0.0) {
        snapshots.push(initial.clone());
    }
    let (mut dt, dt_max, fixed) = match options.dt {
        DtPolicy::Adaptive { initial: first, max } => (first.unwrap_or_else(|| scheme.initial_dt(&initial.u)).min(max), max, false),
        DtPolicy::Fixed { dt } => (dt, dt, true),
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(RunError::Options(format!("time step must be positive, got {dt}")));
    }

    let mut field = initial;
    let mut log = Vec::new();
    let mut termination = cap_termination;
    let mut non_physical = false;
    let mut rejected = 0;
    let mut easy = 0;
    let mut failure = None;
    let mut next = 0;
    'outer: while next < targets.len() {
        let target = targets[next];
        let remaining = target - field.t;
        // land exactly on the target when close
        let mut h_try = if dt >= remaining * (1.0 - 1e-9) { remaining } else { dt.min(remaining) };
        let mut halvings = 0;
        let outcome = loop {
            match scheme.step(&field.u, h_try) {
                Ok(out) => break out,
                Err(e) => {
                    rejected += 1;
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        failure = Some(e);
                        termination = Termination::NewtonFailure;
                        break 'outer;
                    }
                    h_try *= 0.5;
                }
            }
        };
        let landed = h_try == remaining;
        field = scheme.accept(&field, outcome.u, h_try);
        if landed {
            field.t = target;
        }
        let mut report = match bounds {
            Some(b) => monitor_bounds(&field, b, params),
            None => BoundReport::empty(field.step_count, field.t),
        };
        report.dt = h_try;
        log.push(report);

        if !fixed {
            if halvings > 0 {
                dt = h_try;
                easy = 0;
            } else if outcome.iterations <= 3 {
                easy += 1;
                if easy >= 5 {
                    dt = (2.0 * dt).min(dt_max);
                    easy = 0;
                }
            } else {
                easy = 0;
            }
        }

        if !detect_degenerate(&field, params).is_empty() {
            if options.override_backward {
                non_physical = true;
            } else {
                termination = Termination::BackwardRegimeDetected;
                break;
            }
        }
        if landed {
            if next + 1 < targets.len() || options.output_times.contains(&target) {
                snapshots.push(field.clone());
            }
            next += 1;
        }
    }
    Ok(SimulationResult {
        snapshots,
        monitor_log: log,
        termination,
        horizon,
        final_field: field,
        non_physical,
        rejected_steps: rejected,
        newton_failure: failure,
    })
}
