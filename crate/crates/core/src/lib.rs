//! Steady and unsteady Poiseuille flow of a Carreau-Yasuda fluid in a
//! circular pipe driven by a radially varying pressure gradient.
//!
//! The crate covers the constitutive law ([`rheology`]), the pressure
//! gradient and its weighted mean ([`pressure`]), steady profiles with
//! existence certification ([`steady`]), a flux-conservative implicit
//! integrator for the time-dependent problem ([`unsteady`]) and the
//! a-priori constants used as runtime monitors ([`bounds`]).

pub mod bounds;
pub mod linalg;
pub mod pressure;
pub mod quadrature;
pub mod rheology;
pub mod roots;
pub mod spline;
pub mod steady;
pub mod unsteady;

pub use bounds::{BoundCheck, BoundReport, BoundsError, BoundsSet, FlowCase, HypothesisReport};
pub use pressure::{PressureError, PressureIntegral, PressureProfile, ProfileShape};
pub use rheology::{FluxRange, ModelParams, ParamError, RegimeClass, RegimeTag, RheologyError};
pub use steady::{ExistenceReport, SteadyError, SteadyProfile, Verdict};
pub use unsteady::{DtPolicy, Field, Grid, InitialCondition, RunOptions, SimulationResult, Termination};
