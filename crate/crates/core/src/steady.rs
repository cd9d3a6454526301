//! Steady profiles and their existence certificate.
//!
//! The steady momentum balance integrates once to `F(V_Y) = B_ε(Y)`, so the
//! velocity gradient is the inverse flux of the weighted pressure mean and
//! the velocity follows by integrating inward from the wall. A steady flow
//! exists exactly when `sup B_ε` lies inside the range of `F`.
//!
//! Sign convention: `V ≤ 0` here, so the equilibrium of the time-dependent
//! problem is `-V` (see [`SteadyProfile::equilibrium`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pressure::{b_integral_sup, PressureIntegral, PressureProfile};
use crate::rheology::{flux, flux_max, invert_flux, FluxRange, ModelParams, RheologyError};

/// Relative width of the band around the threshold treated as equality.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Flux-residual tolerance used for every inversion along a profile.
pub const INVERSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Classical,
    GeneralizedBoundaryCase,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub verdict: Verdict,
    /// Upper limit of the flux range, absent when the range is unbounded.
    pub threshold: Option<f64>,
    pub sup_b: f64,
    pub sup_location: f64,
    /// `threshold - sup_b`.
    pub margin: Option<f64>,
    /// Short statement of the criterion that decided the verdict.
    pub basis: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyError {
    #[error("no steady solution: sup B = {sup_b} exceeds the flux limit {threshold}")]
    NoSolution { sup_b: f64, threshold: f64 },
    #[error("flux limit {threshold} is a supremum that is never attained; the boundary case has unbounded gradient")]
    UnboundedGradient { threshold: f64 },
    #[error("grid needs at least 2 cells, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Inversion(#[from] RheologyError),
}

/// Classifies existence from the supremum of `B_ε` at the parameters' `ε`.
pub fn check_existence(params: &ModelParams, profile: &PressureProfile) -> ExistenceReport {
    let (sup_b, sup_location) = b_integral_sup(params.eps, profile, params.radius);
    classify(flux_max(params), sup_b, sup_location)
}

fn classify(range: FluxRange, sup_b: f64, sup_location: f64) -> ExistenceReport {
    let (verdict, threshold, basis) = match range {
        FluxRange::Unbounded => (
            Verdict::Classical,
            None,
            "flux is strictly increasing and unbounded; every pressure gradient admits a classical solution".to_string(),
        ),
        FluxRange::Supremum { value } | FluxRange::Maximum { value, .. } => {
            let band = BOUNDARY_BAND * value;
            let kind = if range.attained() { "peak flux" } else { "flux supremum" };
            let verdict = if sup_b < value - band {
                Verdict::Classical
            } else if sup_b <= value + band {
                Verdict::GeneralizedBoundaryCase
            } else {
                Verdict::None
            };
            let basis = match verdict {
                Verdict::Classical => format!("sup B below the {kind}"),
                Verdict::GeneralizedBoundaryCase => format!("sup B equals the {kind} within {BOUNDARY_BAND:e} relative"),
                Verdict::None => format!("sup B exceeds the {kind}"),
            };
            (verdict, Some(value), basis)
        }
    };
    ExistenceReport { verdict, threshold, sup_b, sup_location, margin: threshold.map(|t| t - sup_b), basis }
}

/// Steady profile on the uniform grid `Y_i = i h`, `h = R/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyProfile {
    pub grid: Vec<f64>,
    /// Velocity at the nodes, `V ≤ 0`, `V(R) = 0`.
    pub v: Vec<f64>,
    /// Gradient `F⁻¹(B_ε)` at the nodes.
    pub v_y: Vec<f64>,
    /// Gradient `F⁻¹(B_ε)` at the face midpoints `Y_{i+1/2}`, `i = 0..N`.
    pub face_gradient: Vec<f64>,
    /// `B_ε` at the nodes.
    pub b_eps: Vec<f64>,
    pub eps: f64,
    pub report: ExistenceReport,
}

/// Gradient and velocity built from a half-step table of `B`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Integrated {
    pub v: Vec<f64>,
    /// Inverse flux at every half-step point `j h/2`, `j = 0..=2N`.
    pub gradient: Vec<f64>,
}

/// Inverts the flux at every point of `table` (which must have `2N` cells)
/// and integrates the face values inward from the wall. Values above `cap`
/// are clamped to it.
pub(crate) fn integrate_table(params: &ModelParams, table: &PressureIntegral, cap: Option<f64>) -> Result<Integrated, RheologyError> {
    let cells = table.cells / 2;
    let h = table.radius / cells as f64;
    let gradient = table
        .samples
        .iter()
        .map(|&b| {
            let zeta = cap.map_or(b, |c| b.min(c));
            invert_flux(zeta, params, INVERSION_TOL).map(|inv| inv.eta)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut v = vec![0.0; cells + 1];
    for i in (0..cells).rev() {
        v[i] = v[i + 1] - h * gradient[2 * i + 1];
    }
    Ok(Integrated { v, gradient })
}

/// Builds the steady profile on `cells` uniform cells.
///
/// The velocity is accumulated from the wall with the face-midpoint rule,
/// which makes `-V` an exact equilibrium of the finite-volume scheme in
/// [`crate::unsteady`].
pub fn solve_steady(params: &ModelParams, profile: &PressureProfile, cells: usize) -> Result<SteadyProfile, SteadyError> {
    if cells < 2 {
        return Err(SteadyError::GridTooSmall(cells));
    }
    let report = check_existence(params, profile);
    let cap = match (report.verdict, flux_max(params)) {
        (Verdict::None, _) => {
            return Err(SteadyError::NoSolution { sup_b: report.sup_b, threshold: report.threshold.unwrap_or(f64::INFINITY) })
        }
        (Verdict::GeneralizedBoundaryCase, FluxRange::Supremum { value }) => {
            return Err(SteadyError::UnboundedGradient { threshold: value })
        }
        (Verdict::GeneralizedBoundaryCase, FluxRange::Maximum { value, .. }) => Some(value),
        _ => None,
    };
    let table = PressureIntegral::tabulate(profile, params.eps, params.radius, 2 * cells);
    let Integrated { v, gradient } = integrate_table(params, &table, cap)?;
    let h = params.radius / cells as f64;
    let grid = (0..=cells).map(|i| if i == cells { params.radius } else { i as f64 * h }).collect();
    Ok(SteadyProfile {
        grid,
        v,
        v_y: (0..=cells).map(|i| gradient[2 * i]).collect(),
        face_gradient: (0..cells).map(|i| gradient[2 * i + 1]).collect(),
        b_eps: (0..=cells).map(|i| table.samples[2 * i]).collect(),
        eps: params.eps,
        report,
    })
}

impl SteadyProfile {
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.grid[self.cells()] / self.cells() as f64
    }

    /// Nodal values of the time-dependent equilibrium, `-V`.
    pub fn equilibrium(&self) -> Vec<f64> {
        self.v.iter().map(|v| -v).collect()
    }

    /// `max_i |F(V_Y(Y_i)) - B_ε(Y_i)|`.
    pub fn identity_residual(&self, params: &ModelParams) -> f64 {
        self.v_y.iter().zip(&self.b_eps).map(|(&g, &b)| (flux(g, params) - b).abs()).fold(0.0, f64::max)
    }

    /// Checks `0 ≤ V_Y ≤ F⁻¹(B_{ε₀}) ≤ F⁻¹(b₀(R+ε₀)/2)` nodewise.
    pub fn gradient_estimate(&self, params: &ModelParams, profile: &PressureProfile) -> GradientEstimate {
        let cap = 0.5 * profile.b0 * (params.radius + params.eps0);
        let global = match invert_flux(cap, params, INVERSION_TOL) {
            Ok(inv) => inv.eta,
            Err(_) => return GradientEstimate::NotApplicable { argument: cap, limit: flux_max(params).limit().unwrap_or(f64::INFINITY) },
        };
        let cells = self.cells();
        let wide = PressureIntegral::tabulate(profile, params.eps0, params.radius, cells);
        let mut worst = f64::INFINITY;
        let mut pointwise_ok = true;
        for (i, &g) in self.v_y.iter().enumerate() {
            let local = match invert_flux(wide.samples[i], params, INVERSION_TOL) {
                Ok(inv) => inv.eta,
                Err(_) => {
                    pointwise_ok = false;
                    continue;
                }
            };
            let slack = 1e-10 * (1.0 + global);
            if g < -slack || g > local + slack || local > global + slack {
                pointwise_ok = false;
            }
            worst = worst.min(global - g);
        }
        GradientEstimate::Checked { bound: global, min_margin: worst, passed: pointwise_ok && worst >= 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GradientEstimate {
    Checked { bound: f64, min_margin: f64, passed: bool },
    /// `b₀(R+ε₀)/2` lies outside the range of `F`.
    NotApplicable { argument: f64, limit: f64 },
}

/// Max over interior nodes of `|(1/(w_i)) [face flux difference] - b(Y_i)|`
/// with `w_i = h (Y_i + ε)` and face fluxes `(Y_f + ε) F((V_{i+1}-V_i)/h)`.
pub fn steady_residual(steady: &SteadyProfile, profile: &PressureProfile, params: &ModelParams) -> f64 {
    let n = steady.cells();
    let h = steady.spacing();
    let eps = steady.eps;
    let face_flux = |i: usize| {
        let yf = (i as f64 + 0.5) * h;
        (yf + eps) * flux((steady.v[i + 1] - steady.v[i]) / h, params)
    };
    let mut worst: f64 = 0.0;
    for i in 1..n {
        let y = steady.grid[i];
        let lv = (face_flux(i) - face_flux(i - 1)) / (h * (y + eps));
        worst = worst.max((lv - profile.value(y)).abs());
    }
    worst
}
