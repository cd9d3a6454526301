//! Carreau-Yasuda constitutive law.
//!
//! The momentum flux of a shear rate `η` is
//! `F(η) = (1 + (κ|η|)^α)^((n-1)/α) · η`, and the coefficient of the
//! second derivative in the non-divergence form of the momentum equation is
//! `Φ(η) = F'(η) = (1 + n(κη)^α)(1 + (κη)^α)^((n-1-α)/α)`.
//!
//! For `n < 0` (and `κ > 0`) the flux peaks at the critical shear rate
//! `η₀ = κ⁻¹(-1/n)^(1/α)` with value `ζ₀`; beyond `η₀` the equation turns
//! backward parabolic. For `n = 0` the flux saturates towards `κ⁻¹`
//! without reaching it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots::{brent, RootError};

/// Model parameters in dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Power index.
    pub n: f64,
    /// Transition exponent, `α > 0`.
    pub alpha: f64,
    /// Carreau number, `κ ≥ 0`.
    pub kappa: f64,
    /// `8β²` is the Reynolds-Strouhal product.
    pub beta: f64,
    /// Pipe radius.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Regularization shift of the radial coordinate.
    pub eps: f64,
    /// Upper end of the admissible regularization range.
    pub eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parameter `{name}` = {value} violates {constraint}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
    pub constraint: &'static str,
}

impl ModelParams {
    /// Builds a parameter set with the default regularization
    /// `ε = 1e-3·R`, `ε₀ = 1e-2·R`.
    pub fn new(n: f64, alpha: f64, kappa: f64, beta: f64, radius: f64) -> Result<Self, ParamError> {
        let p = Self { n, alpha, kappa, beta, radius, eps: 1e-3 * radius, eps0: 1e-2 * radius };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, ParamError> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps0(mut self, eps0: f64) -> Result<Self, ParamError> {
        self.eps0 = eps0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |ok: bool, name, value, constraint| if ok { Ok(()) } else { Err(ParamError { name, value, constraint }) };
        check(self.n.is_finite(), "n", self.n, "n finite")?;
        check(self.alpha > 0.0 && self.alpha.is_finite(), "alpha", self.alpha, "alpha > 0")?;
        check(self.kappa >= 0.0 && self.kappa.is_finite(), "kappa", self.kappa, "kappa >= 0")?;
        check(self.beta > 0.0 && self.beta.is_finite(), "beta", self.beta, "beta > 0")?;
        check(self.radius > 0.0 && self.radius.is_finite(), "R", self.radius, "R > 0")?;
        check(self.eps0 > 0.0 && self.eps0 < self.radius, "eps0", self.eps0, "0 < eps0 < R")?;
        check(self.eps > 0.0 && self.eps <= self.eps0, "eps", self.eps, "0 < eps <= eps0")?;
        Ok(())
    }

    /// `n = 1` or `κ = 0`: the flux is the identity.
    pub fn is_linear(&self) -> bool {
        self.n == 1.0 || self.kappa == 0.0
    }

    /// Coefficient of the time derivative, `8β²`.
    pub fn inertia(&self) -> f64 {
        8.0 * self.beta * self.beta
    }

    /// `(κ|η|)^α`; zero at `η = 0` for every `α > 0`.
    fn scaled_power(&self, eta: f64) -> f64 {
        if self.kappa == 0.0 || eta == 0.0 {
            0.0
        } else {
            (self.kappa * eta.abs()).powf(self.alpha)
        }
    }

    /// Effective viscosity `(1 + (κ|η|)^α)^((n-1)/α)`, i.e. `F(η)/η`.
    pub fn apparent_viscosity(&self, eta: f64) -> f64 {
        if self.is_linear() {
            return 1.0;
        }
        (1.0 + self.scaled_power(eta)).powf((self.n - 1.0) / self.alpha)
    }
}

/// Non-divergence diffusion coefficient `Φ(η)` for `η ≥ 0`.
pub fn viscosity_factor(eta: f64, p: &ModelParams) -> f64 {
    if p.is_linear() {
        return 1.0;
    }
    let t = p.scaled_power(eta);
    (1.0 + p.n * t) * (1.0 + t).powf((p.n - 1.0 - p.alpha) / p.alpha)
}

/// Momentum flux `F(η)`; odd in `η`.
pub fn flux(eta: f64, p: &ModelParams) -> f64 {
    p.apparent_viscosity(eta) * eta
}

/// `F'(η)`, equal to `Φ(|η|)`.
pub fn flux_derivative(eta: f64, p: &ModelParams) -> f64 {
    viscosity_factor(eta.abs(), p)
}

/// Shear rate at which `F'` vanishes; exists only for `n < 0`, `κ > 0`.
pub fn critical_shear_rate(p: &ModelParams) -> Option<f64> {
    (p.n < 0.0 && p.kappa > 0.0).then(|| (-1.0 / p.n).powf(1.0 / p.alpha) / p.kappa)
}

/// Range of `F` on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxRange {
    /// `n > 0` or `κ = 0`: every flux value is reachable.
    Unbounded,
    /// `n = 0`: `F` approaches `value = κ⁻¹` but never attains it.
    Supremum { value: f64 },
    /// `n < 0`: `F` peaks at `value = ζ₀`, attained at `at = η₀`.
    Maximum { value: f64, at: f64 },
}

impl FluxRange {
    pub fn limit(&self) -> Option<f64> {
        match *self {
            FluxRange::Unbounded => None,
            FluxRange::Supremum { value } | FluxRange::Maximum { value, .. } => Some(value),
        }
    }

    pub fn attained(&self) -> bool {
        matches!(self, FluxRange::Maximum { .. })
    }
}

/// Peak flux `ζ₀ = ((n-1)/n)^((n-1)/α) κ⁻¹ (-1/n)^(1/α)` for `n < 0`.
pub fn peak_flux(p: &ModelParams) -> Option<f64> {
    critical_shear_rate(p).map(|eta0| ((p.n - 1.0) / p.n).powf((p.n - 1.0) / p.alpha) * eta0)
}

pub fn flux_max(p: &ModelParams) -> FluxRange {
    if p.kappa == 0.0 || p.n > 0.0 {
        FluxRange::Unbounded
    } else if p.n == 0.0 {
        FluxRange::Supremum { value: 1.0 / p.kappa }
    } else {
        FluxRange::Maximum { value: peak_flux(p).unwrap(), at: critical_shear_rate(p).unwrap() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RheologyError {
    #[error("flux {zeta} is outside the invertible range (limit {limit})")]
    OutOfRange { zeta: f64, limit: f64 },
    #[error("flux inversion failed at zeta = {zeta}: residual {residual}")]
    InversionFailure { zeta: f64, residual: f64 },
    #[error("flux inversion bracket failed: {0}")]
    Bracket(#[from] RootError),
}

/// Result of inverting the flux on its increasing branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxInversion {
    pub eta: f64,
    /// `|F(η) - ζ|`.
    pub residual: f64,
    /// `1/F'(η)`; infinite at the critical shear rate.
    pub condition: f64,
    /// `ζ` matched `ζ₀` within tolerance and `η₀` was returned.
    pub degenerate_boundary: bool,
}

/// Inverts `F` on its increasing branch so that `|F(η) - ζ| ≤ tol`.
///
/// Negative `ζ` is handled by oddness. The bracket is driven down to a few
/// ulps in `η`; `tol` is then checked on the flux residual, since near `η₀`
/// the inverse is arbitrarily ill-conditioned in `η`.
pub fn invert_flux(zeta: f64, p: &ModelParams, tol: f64) -> Result<FluxInversion, RheologyError> {
    if zeta < 0.0 {
        let mut inv = invert_flux(-zeta, p, tol)?;
        inv.eta = -inv.eta;
        return Ok(inv);
    }
    if !zeta.is_finite() {
        return Err(RheologyError::OutOfRange { zeta, limit: f64::INFINITY });
    }
    if zeta == 0.0 {
        return Ok(FluxInversion { eta: 0.0, residual: 0.0, condition: 1.0, degenerate_boundary: false });
    }
    if p.is_linear() {
        return Ok(FluxInversion { eta: zeta, residual: 0.0, condition: 1.0, degenerate_boundary: false });
    }
    let (lo, hi) = match flux_max(p) {
        FluxRange::Maximum { value, at } => {
            if zeta > value + tol {
                return Err(RheologyError::OutOfRange { zeta, limit: value });
            }
            if zeta >= value - tol {
                let residual = (flux(at, p) - zeta).abs();
                return Ok(FluxInversion { eta: at, residual, condition: f64::INFINITY, degenerate_boundary: true });
            }
            (0.0, at)
        }
        FluxRange::Supremum { value } => {
            if zeta >= value {
                return Err(RheologyError::OutOfRange { zeta, limit: value });
            }
            grow_bracket(zeta, p, value)?
        }
        FluxRange::Unbounded => grow_bracket(zeta, p, f64::INFINITY)?,
    };
    let root = brent(|eta| flux(eta, p) - zeta, lo, hi, 0.0, 300)?;
    let residual = (flux(root.x, p) - zeta).abs();
    if residual > tol {
        return Err(RheologyError::InversionFailure { zeta, residual });
    }
    Ok(FluxInversion {
        eta: root.x,
        residual,
        condition: 1.0 / flux_derivative(root.x, p),
        degenerate_boundary: false,
    })
}

/// Doubles an upper bracket from 1 until `F(hi) ≥ ζ`.
fn grow_bracket(zeta: f64, p: &ModelParams, limit: f64) -> Result<(f64, f64), RheologyError> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while flux(hi, p) < zeta {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(RheologyError::OutOfRange { zeta, limit });
        }
    }
    Ok((lo, hi))
}

/// Parabolicity class of the momentum equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    /// `n > 1`, `κ ≠ 0`.
    NonuniformlyParabolic,
    /// `n = 1` or `κ = 0`.
    LinearParabolic,
    /// `0 ≤ n < 1`, `κ ≠ 0`.
    DegenerateAtInfinity,
    /// `n < 0`, `κ ≠ 0`, all shear rates below `η₀`.
    UniformlyParabolicBelowEta0,
    /// `n < 0`, `κ ≠ 0`, some shear rate at or above `η₀`.
    BackwardParabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClass {
    pub tag: RegimeTag,
    pub eta0: Option<f64>,
}

/// Classifies the equation. For `n < 0` the supplied range of `|U_Y|`
/// decides between the forward and backward regimes; without one the
/// fluid is assumed at rest (`|U_Y| = 0`).
pub fn classify_regime(p: &ModelParams, gradient_range: Option<(f64, f64)>) -> RegimeClass {
    let eta0 = critical_shear_rate(p);
    let tag = if p.is_linear() {
        RegimeTag::LinearParabolic
    } else if p.n > 1.0 {
        RegimeTag::NonuniformlyParabolic
    } else if p.n >= 0.0 {
        RegimeTag::DegenerateAtInfinity
    } else {
        let top = gradient_range.map(|(a, b)| a.abs().max(b.abs())).unwrap_or(0.0);
        if top >= eta0.unwrap() {
            RegimeTag::BackwardParabolic
        } else {
            RegimeTag::UniformlyParabolicBelowEta0
        }
    };
    RegimeClass { tag, eta0 }
}
