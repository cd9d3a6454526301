//! Built-in oracle fixtures run by the `verify` command.

use std::path::Path;
use std::time::Instant;

use poiseuille_core::bounds::{monitor_bounds, names, BoundsSet};
use poiseuille_core::pressure::PressureProfile;
use poiseuille_core::rheology::{flux, invert_flux, ModelParams};
use poiseuille_core::steady::{check_existence, solve_steady, steady_residual, Verdict};
use poiseuille_core::unsteady::{run, DtPolicy, Field, Grid, InitialCondition, RunOptions, Scheme, Termination};
use serde::Serialize;

use crate::commands::cmd_unsteady;
use crate::config::parse_config;

pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const ROUND_TRIP_SAMPLES: usize = 200;
pub const ROUND_TRIP_BUDGET_S: f64 = 1.0;
pub const NEWTONIAN_TOL: f64 = 1e-4;
pub const NEWTONIAN_MIN_ORDER: f64 = 1.9;
pub const PEAK_TOL: f64 = 1e-12;
pub const DIVERGENCE_TOL: f64 = 1e-5;
pub const IDENTITY_TOL: f64 = 1e-9;
pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const EPS_RATIO: f64 = 0.25;
pub const SUITE_BUDGET_S: f64 = 60.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!("{} [{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn timed(id: u32, name: &str, f: impl FnOnce() -> (bool, String)) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f();
    CheckOutcome { id, name: name.to_string(), passed, detail, elapsed_s: start.elapsed().as_secs_f64() }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn params(n: f64, alpha: f64, kappa: f64) -> ModelParams {
    ModelParams::new(n, alpha, kappa, 0.5, 1.0).expect("fixture parameters are valid")
}

/// Global-flux fixture: `n = 2`, `α = 2`, `κ = 1`, `β = 0.5`, `R = 1`,
/// constant `b = 1`, compatible quartic start.
pub fn global_fixture(n: f64) -> (ModelParams, PressureProfile, InitialCondition) {
    let b = PressureProfile::constant(1.0).expect("positive constant");
    let ic = InitialCondition::compatible_quartic(1.0, 1.0);
    (params(n, 2.0, 1.0), b, ic)
}

/// Configuration text of the global-flux fixture for the command layer.
pub const GLOBAL_FIXTURE_CONFIG: &str = r#"schema_version = 1

[params]
n = 2.0
alpha = 2.0
kappa = 1.0
beta = 0.5
R = 1.0

[pressure]
kind = "constant"
value = 1.0

[initial]
kind = "compatible_quartic"

[grid]
cells = 512

[time]
t_end = 1.0
output_times = [0.25, 0.5, 1.0]
"#;

/// Inverse flux recovers every sample on the increasing branch.
pub fn flux_round_trip() -> CheckOutcome {
    timed(1, "flux round trip", || {
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        let mut failures = 0;
        for (n, alpha, kappa) in [(2.0, 2.0, 1.0), (1.0, 2.0, 1.0), (0.5, 1.5, 1.0), (0.0, 2.0, 1.0), (-1.0, 2.0, 1.0)] {
            let p = params(n, alpha, kappa);
            let top = match poiseuille_core::rheology::critical_shear_rate(&p) {
                Some(eta0) => 0.99 * eta0,
                None => 10.0,
            };
            for k in 0..ROUND_TRIP_SAMPLES {
                let eta = top * k as f64 / (ROUND_TRIP_SAMPLES - 1) as f64;
                let zeta = flux(eta, &p);
                match invert_flux(zeta, &p, 1e-12 * zeta.abs().max(1.0)) {
                    Ok(inv) => worst = worst.max((inv.eta - eta).abs() / eta.max(1.0)),
                    Err(_) => failures += 1,
                }
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        (
            failures == 0 && worst <= ROUND_TRIP_TOL && elapsed < ROUND_TRIP_BUDGET_S,
            format!("max scaled error {worst:.3e} (tol {ROUND_TRIP_TOL:.0e}), {failures} failures, {elapsed:.3} s"),
        )
    })
}

/// Errors of the Newtonian steady profile against `-(R² - Y²)` at the
/// three grids, and the two observed orders.
pub fn newtonian_errors() -> ([f64; 3], [f64; 2]) {
    let p = params(1.0, 2.0, 0.0).with_eps(1e-6).expect("small eps");
    let b = PressureProfile::constant(4.0).expect("positive constant");
    let mut errors = [0.0; 3];
    for (k, cells) in [256usize, 512, 1024].into_iter().enumerate() {
        let s = solve_steady(&p, &b, cells).expect("Newtonian steady solve");
        errors[k] = s.grid.iter().zip(&s.v).map(|(&y, &v)| (v + (1.0 - y * y)).abs()).fold(0.0, f64::max);
    }
    let orders = [(errors[0] / errors[1]).log2(), (errors[1] / errors[2]).log2()];
    (errors, orders)
}

pub fn newtonian_steady() -> CheckOutcome {
    timed(2, "Newtonian steady oracle", || {
        let (e, o) = newtonian_errors();
        let order = o[0].min(o[1]);
        (
            e[2] <= NEWTONIAN_TOL && order >= NEWTONIAN_MIN_ORDER,
            format!(
                "error at N=1024 {:.3e} (tol {NEWTONIAN_TOL:.0e}); errors {:.3e}, {:.3e}, {:.3e}; observed order {order:.3} (need {NEWTONIAN_MIN_ORDER})",
                e[2], e[0], e[1], e[2]
            ),
        )
    })
}

pub fn threshold_straddle() -> CheckOutcome {
    timed(3, "existence threshold straddle", || {
        let sat = params(0.0, 2.0, 1.0).with_eps(1e-4).expect("valid eps");
        let v: Vec<Verdict> = [1.8, 2.2]
            .iter()
            .map(|&b0| check_existence(&sat, &PressureProfile::constant(b0).expect("positive")).verdict)
            .collect();
        let peaked = params(-1.0, 2.0, 1.0);
        let eps = peaked.eps;
        // constant b: sup B_ε = b₀(R²/2 + εR)/(R + ε)
        let b_for = |target: f64| target * (1.0 + eps) / (0.5 + eps);
        let below = check_existence(&peaked, &PressureProfile::constant(b_for(0.45)).expect("positive"));
        let above = check_existence(&peaked, &PressureProfile::constant(b_for(0.55)).expect("positive"));
        let zeta0 = below.threshold.unwrap_or(f64::NAN);
        let ok = v == [Verdict::Classical, Verdict::None]
            && (zeta0 - 0.5).abs() <= PEAK_TOL
            && below.verdict == Verdict::Classical
            && above.verdict == Verdict::None;
        (
            ok,
            format!(
                "n=0: {:?}/{:?}; n=-1: zeta0 error {:.1e}, {:?}/{:?}",
                v[0],
                v[1],
                (zeta0 - 0.5).abs(),
                below.verdict,
                above.verdict
            ),
        )
    })
}

pub fn steady_residuals() -> CheckOutcome {
    timed(4, "steady residual and flux identity", || {
        let b = PressureProfile::constant(1.0).expect("positive");
        let mut ok = true;
        let mut parts = Vec::new();
        for n in [2.0, 0.5] {
            let p = params(n, 2.0, 1.0);
            match solve_steady(&p, &b, 2048) {
                Ok(s) => {
                    let div = steady_residual(&s, &b, &p);
                    let id = s.identity_residual(&p);
                    ok &= div <= DIVERGENCE_TOL && id <= IDENTITY_TOL;
                    parts.push(format!("n={n}: divergence {div:.2e}, identity {id:.2e}"));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("n={n}: {e}"));
                }
            }
        }
        (ok, parts.join("; "))
    })
}

pub fn unsteady_fixed_point() -> CheckOutcome {
    timed(5, "steady profile is a fixed point", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for n in [2.0, 0.5] {
            let (p, b, _) = global_fixture(n);
            let cells = 512;
            let s = match solve_steady(&p, &b, cells) {
                Ok(s) => s,
                Err(e) => return (false, e.to_string()),
            };
            let scheme = Scheme::new(&p, &b, cells);
            let start = Field::new(scheme.grid, 0.0, s.equilibrium());
            let mut f = start.clone();
            for _ in 0..100 {
                match scheme.advance(&f, 1e-2) {
                    Ok(next) => f = next,
                    Err(e) => return (false, format!("n={n}: Newton failure {e:?}")),
                }
            }
            let change = sup_diff(&f.u, &start.u);
            ok &= change <= FIXED_POINT_TOL;
            parts.push(format!("n={n}: change {change:.2e}"));
        }
        (ok, parts.join("; "))
    })
}

pub fn bound_monitors() -> CheckOutcome {
    timed(6, "a-priori bound monitors", || {
        let (p, b, ic) = global_fixture(2.0);
        let opts = RunOptions { cells: 512, t_end: 5.0, ..Default::default() };
        let r = match run(&ic, &p, &b, &opts) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let failing: Vec<String> = r
            .monitor_log
            .iter()
            .flat_map(|rep| rep.checks.iter().filter(|c| c.enforced && !c.passed).map(move |c| format!("{}@{}", c.name, rep.step)))
            .collect();
        let set = BoundsSet::compute(&ic, &b, &p, opts.t0_cap);
        let grid = Grid::new(512, 1.0);
        let scale = 10.0 * set.k1 * p.radius * p.radius;
        let bad = Field::new(grid, 0.0, grid.nodes().iter().map(|y| scale * (1.0 - y * y)).collect());
        let caught = monitor_bounds(&bad, &set, &p).check(names::VALUE_PARABOLIC).is_some_and(|c| !c.passed);
        let ok = r.termination == Termination::ReachedTend && failing.is_empty() && !r.monitor_log.is_empty() && caught;
        (
            ok,
            format!(
                "{} steps monitored, {} failing checks, corrupted field {}",
                r.monitor_log.len(),
                failing.len(),
                if caught { "rejected" } else { "accepted" }
            ),
        )
    })
}

/// Peaked-flux fixture with `K5 = 0.5` and `η₀ = 1`.
pub fn peaked_fixture() -> (ModelParams, PressureProfile, InitialCondition) {
    let p = params(-1.0, 2.0, 1.0);
    let b = PressureProfile::polynomial(vec![0.5, 0.0, -0.5], 0.5).expect("admissible profile");
    let ic = InitialCondition::polynomial(vec![-0.05, 0.0, 0.15, 0.0, -0.15, 0.0, 0.05]);
    (p, b, ic)
}

pub fn lambda_horizon() -> CheckOutcome {
    timed(7, "peaked-flux horizon", || {
        let (p, b, ic) = peaked_fixture();
        let r = match run(&ic, &p, &b, &RunOptions { cells: 512, t_end: 5.0, ..Default::default() }) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let target = 0.95 * 2f64.ln();
        let last_dt = r.monitor_log.last().map_or(0.0, |rep| rep.dt);
        let t = r.final_field.t;
        let max_gradient = r
            .monitor_log
            .iter()
            .filter_map(|rep| rep.check(names::GRADIENT_ENVELOPE))
            .map(|c| c.observed)
            .fold(0.0, f64::max);
        let envelope_ok = r.monitor_log.iter().all(|rep| rep.check(names::GRADIENT_ENVELOPE).is_some_and(|c| c.passed));
        let ok = r.termination == Termination::ReachedLambda && (t - target).abs() <= last_dt && max_gradient < 1.0 && envelope_ok;
        (
            ok,
            format!(
                "{:?} at T={t:.12} (target {target:.12}, last dt {last_dt:.2e}); max |U_Y| {max_gradient:.4} < 1; envelope {}",
                r.termination,
                if envelope_ok { "holds" } else { "violated" }
            ),
        )
    })
}

/// Final fields at `ε ∈ {1e-2, 1e-3, 1e-4}` and their pairwise differences.
pub fn eps_differences() -> Result<[f64; 2], String> {
    let (_, b, ic) = global_fixture(2.0);
    let mut finals = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let p = params(2.0, 2.0, 1.0).with_eps(eps).map_err(|e| e.to_string())?;
        let opts = RunOptions { cells: 512, t_end: 1.0, dt: DtPolicy::Fixed { dt: 1e-3 }, ..Default::default() };
        finals.push(run(&ic, &p, &b, &opts).map_err(|e| e.to_string())?.final_field.u);
    }
    Ok([sup_diff(&finals[0], &finals[1]), sup_diff(&finals[1], &finals[2])])
}

pub fn eps_convergence() -> CheckOutcome {
    timed(8, "regularization convergence", || match eps_differences() {
        Ok([d12, d23]) => (
            d23 < d12 && d23 <= EPS_RATIO * d12,
            format!("d(1e-2,1e-3) {d12:.3e}, d(1e-3,1e-4) {d23:.3e}, ratio {:.3} (need <= {EPS_RATIO})", d23 / d12),
        ),
        Err(e) => (false, e),
    })
}

/// Snapshot file names and contents from one `unsteady` run.
pub fn snapshot_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let cfg = parse_config(GLOBAL_FIXTURE_CONFIG).map_err(|e| e.to_string())?;
    cmd_unsteady(&cfg, dir).map_err(|e| e.to_string())?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .map(|n| {
            let bytes = std::fs::read(dir.join(&n)).unwrap_or_default();
            (n, bytes)
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn determinism() -> CheckOutcome {
    timed(9, "deterministic snapshots", || {
        let dirs = (tempfile::tempdir(), tempfile::tempdir());
        let (Ok(a), Ok(b)) = dirs else {
            return (false, "could not create temporary directories".into());
        };
        match (snapshot_bytes(a.path()), snapshot_bytes(b.path())) {
            (Ok(x), Ok(y)) => (x == y && !x.is_empty(), format!("{} snapshot files, {}", x.len(), if x == y { "identical" } else { "differ" })),
            (Err(e), _) | (_, Err(e)) => (false, e),
        }
    })
}

/// Runs fixtures 1 to 9 and appends the total-time check.
pub fn run_all() -> Vec<CheckOutcome> {
    let start = Instant::now();
    let mut out = vec![
        flux_round_trip(),
        newtonian_steady(),
        threshold_straddle(),
        steady_residuals(),
        unsteady_fixed_point(),
        bound_monitors(),
        lambda_horizon(),
        eps_convergence(),
        determinism(),
    ];
    let total = start.elapsed().as_secs_f64();
    out.push(CheckOutcome {
        id: 10,
        name: "suite wall time".into(),
        passed: total < SUITE_BUDGET_S,
        detail: format!("{total:.2} s (budget {SUITE_BUDGET_S} s)"),
        elapsed_s: total,
    });
    out
}
