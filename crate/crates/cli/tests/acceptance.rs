//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Tolerances are written out here rather than read
//! from the library.

use std::time::Instant;

use poiseuille_cli::commands::cmd_unsteady;
use poiseuille_cli::config::parse_config;
use poiseuille_cli::verify;
use poiseuille_core::bounds::{monitor_bounds, names, BoundsSet};
use poiseuille_core::pressure::PressureProfile;
use poiseuille_core::rheology::{flux, invert_flux, ModelParams};
use poiseuille_core::steady::{check_existence, solve_steady, steady_residual, Verdict};
use poiseuille_core::unsteady::{run, DtPolicy, Field, Grid, InitialCondition, RunOptions, Scheme, Termination};

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn model(n: f64, alpha: f64, kappa: f64) -> ModelParams {
    ModelParams::new(n, alpha, kappa, 0.5, 1.0).unwrap()
}

fn global_fixture(n: f64) -> (ModelParams, PressureProfile, InitialCondition) {
    (model(n, 2.0, 1.0), PressureProfile::constant(1.0).unwrap(), InitialCondition::compatible_quartic(1.0, 1.0))
}

fn flux_round_trip() -> (bool, String) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for (n, alpha, kappa) in [(2.0, 2.0, 1.0), (1.0, 2.0, 1.0), (0.5, 1.5, 1.0), (0.0, 2.0, 1.0), (-1.0, 2.0, 1.0)] {
        let p = model(n, alpha, kappa);
        // increasing branch: below η₀ = κ⁻¹(-1/n)^{1/α} for n < 0
        let top = if n < 0.0 { 0.99 * (-1.0 / n).powf(1.0 / alpha) / kappa } else { 10.0 };
        for k in 0..200 {
            let eta = top * k as f64 / 199.0;
            let zeta = flux(eta, &p);
            match invert_flux(zeta, &p, 1e-12 * zeta.max(1.0)) {
                Ok(inv) => worst = worst.max((inv.eta - eta).abs() / eta.max(1.0)),
                Err(_) => failures += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (failures == 0 && worst <= 1e-8 && secs < 1.0, format!("max scaled error {worst:.2e}, {failures} inversion failures, {secs:.3} s"))
}

fn newtonian_oracle() -> (bool, String) {
    let p = model(1.0, 2.0, 0.0).with_eps(1e-6).unwrap();
    let b = PressureProfile::constant(4.0).unwrap();
    let errs: Vec<f64> = [256usize, 512, 1024]
        .iter()
        .map(|&n| {
            let s = solve_steady(&p, &b, n).unwrap();
            s.grid.iter().zip(&s.v).map(|(&y, &v)| (v - (-(1.0 - y * y))).abs()).fold(0.0, f64::max)
        })
        .collect();
    let order = (errs[0] / errs[1]).log2().min((errs[1] / errs[2]).log2());
    (
        errs[2] <= 1e-4 && order >= 1.9,
        format!("error {:.3e} at N=1024 (tol 1e-4), observed order {order:.3} (need >= 1.9), errors {:.3e} {:.3e} {:.3e}", errs[2], errs[0], errs[1], errs[2]),
    )
}

fn threshold_straddle() -> (bool, String) {
    let sat = model(0.0, 2.0, 1.0).with_eps(1e-4).unwrap();
    let lo = check_existence(&sat, &PressureProfile::constant(1.8).unwrap()).verdict;
    let hi = check_existence(&sat, &PressureProfile::constant(2.2).unwrap()).verdict;
    let peaked = model(-1.0, 2.0, 1.0);
    // ζ₀ for n = -1, α = 2, κ = 1: η₀ = 1, F(1) = 2^{-1}·1
    let zeta0 = 0.5;
    let e = peaked.eps;
    let b_for = |sup: f64| sup * (1.0 + e) / (0.5 + e);
    let below = check_existence(&peaked, &PressureProfile::constant(b_for(0.9 * zeta0)).unwrap());
    let above = check_existence(&peaked, &PressureProfile::constant(b_for(1.1 * zeta0)).unwrap());
    let reported = below.threshold.unwrap_or(f64::NAN);
    let ok = (lo, hi) == (Verdict::Classical, Verdict::None)
        && (reported - zeta0).abs() <= 1e-12
        && (below.verdict, above.verdict) == (Verdict::Classical, Verdict::None);
    (ok, format!("n=0 {lo:?}/{hi:?}; n=-1 zeta0 {reported}, {:?}/{:?}", below.verdict, above.verdict))
}

fn steady_residuals() -> (bool, String) {
    let b = PressureProfile::constant(1.0).unwrap();
    let mut ok = true;
    let mut text = Vec::new();
    for n in [2.0, 0.5] {
        let p = model(n, 2.0, 1.0).with_eps(1e-3).unwrap();
        let s = solve_steady(&p, &b, 2048).unwrap();
        let div = steady_residual(&s, &b, &p);
        let id = s.v_y.iter().zip(&s.b_eps).map(|(&g, &be)| (flux(g, &p) - be).abs()).fold(0.0, f64::max);
        ok &= div <= 1e-5 && id <= 1e-9;
        text.push(format!("n={n}: divergence {div:.2e} (tol 1e-5), identity {id:.2e} (tol 1e-9)"));
    }
    (ok, text.join("; "))
}

fn fixed_point() -> (bool, String) {
    let mut ok = true;
    let mut text = Vec::new();
    for n in [2.0, 0.5] {
        let (p, b, _) = global_fixture(n);
        let s = solve_steady(&p, &b, 512).unwrap();
        let scheme = Scheme::new(&p, &b, 512);
        let start = Field::new(scheme.grid, 0.0, s.equilibrium());
        let mut f = start.clone();
        for _ in 0..100 {
            f = scheme.advance(&f, 1e-2).unwrap();
        }
        let change = sup_diff(&f.u, &start.u);
        ok &= change <= 1e-8;
        text.push(format!("n={n}: change {change:.2e} (tol 1e-8)"));
    }
    (ok, text.join("; "))
}

fn monitors() -> (bool, String) {
    let (p, b, ic) = global_fixture(2.0);
    let r = run(&ic, &p, &b, &RunOptions { cells: 512, t_end: 5.0, ..Default::default() }).unwrap();
    let h = 1.0 / 512.0;
    // every enforced check passes, and the monitor used the 10h² slack
    let mut worst = f64::INFINITY;
    let mut all = r.termination == Termination::ReachedTend;
    for rep in &r.monitor_log {
        for c in rep.checks.iter().filter(|c| c.enforced) {
            all &= c.passed && (c.margin - (c.bound + 10.0 * h * h - c.observed)).abs() <= 1e-12 * (1.0 + c.bound.abs());
            worst = worst.min(c.margin);
        }
    }
    let set = BoundsSet::compute(&ic, &b, &p, 10.0);
    let grid = Grid::new(512, 1.0);
    let scale = 10.0 * set.k1;
    let bad = Field::new(grid, 0.0, grid.nodes().iter().map(|y| scale * (1.0 - y * y)).collect());
    let caught = !monitor_bounds(&bad, &set, &p).check(names::VALUE_PARABOLIC).unwrap().passed;
    (all && caught, format!("{} steps, smallest margin {worst:.2e}, corrupted field rejected: {caught}", r.monitor_log.len()))
}

fn lambda_horizon() -> (bool, String) {
    let (p, b, ic) = verify::peaked_fixture();
    let set = BoundsSet::compute(&ic, &b, &p, 10.0);
    let r = run(&ic, &p, &b, &RunOptions { cells: 512, t_end: 5.0, ..Default::default() }).unwrap();
    let target = 0.95 * 2f64.ln();
    let last_dt = r.monitor_log.last().unwrap().dt;
    let max_gradient = r.monitor_log.iter().map(|rep| rep.check(names::GRADIENT_ENVELOPE).unwrap().observed).fold(0.0, f64::max);
    let envelope = r.monitor_log.iter().all(|rep| rep.check(names::GRADIENT_ENVELOPE).unwrap().passed);
    let ok = (set.k5.unwrap() - 0.5).abs() < 1e-12
        && r.termination == Termination::ReachedLambda
        && (r.final_field.t - target).abs() <= last_dt
        && max_gradient < 1.0
        && envelope
        && set.envelope_factor == (8.0f64 * 0.5 * 0.5).max(1.0);
    (ok, format!("K5 {:.3}, {:?} at T={:.12} (0.95 ln 2 = {target:.12}), max |U_Y| {max_gradient:.3}", set.k5.unwrap(), r.termination, r.final_field.t))
}

fn eps_convergence() -> (bool, String) {
    let (_, b, ic) = global_fixture(2.0);
    let u: Vec<Vec<f64>> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| {
            let p = model(2.0, 2.0, 1.0).with_eps(e).unwrap();
            run(&ic, &p, &b, &RunOptions { cells: 512, t_end: 1.0, dt: DtPolicy::Fixed { dt: 1e-3 }, ..Default::default() }).unwrap().final_field.u
        })
        .collect();
    let d12 = sup_diff(&u[0], &u[1]);
    let d23 = sup_diff(&u[1], &u[2]);
    (d23 < d12 && d23 <= 0.25 * d12, format!("differences {d12:.3e}, {d23:.3e}, ratio {:.3} (need <= 0.25)", d23 / d12))
}

fn determinism() -> (bool, String) {
    let cfg = parse_config(verify::GLOBAL_FIXTURE_CONFIG).unwrap();
    let read = |dir: &std::path::Path| -> Vec<(String, Vec<u8>)> {
        cmd_unsteady(&cfg, dir).unwrap();
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (x, y) = (read(a.path()), read(b.path()));
    (x == y && x.len() >= 2, format!("{} CSV files, byte-identical: {}", x.len(), x == y))
}

fn main() {
    let criteria: [(&str, fn() -> (bool, String)); 9] = [
        ("flux round trip", flux_round_trip),
        ("Newtonian steady oracle", newtonian_oracle),
        ("existence threshold straddle", threshold_straddle),
        ("steady residual", steady_residuals),
        ("unsteady fixed point", fixed_point),
        ("bound monitors", monitors),
        ("peaked-flux horizon", lambda_horizon),
        ("regularization convergence", eps_convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = std::panic::catch_unwind(f).unwrap_or_else(|_| (false, "panicked".into()));
        failed += usize::from(!ok);
        println!("{} criterion {:>2} ({name}): {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    let start = Instant::now();
    let checks = verify::run_all();
    let secs = start.elapsed().as_secs_f64();
    let ok = secs < 60.0 && checks.len() == 10;
    failed += usize::from(!ok);
    println!("{} criterion 10 (verify suite time): {secs:.2} s (budget 60 s)", if ok { "PASS" } else { "FAIL" });
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
