use poiseuille_core::bounds::{BoundsSet, SLACK_FACTOR};
use poiseuille_core::pressure::PressureProfile;
use poiseuille_core::rheology::ModelParams;
use poiseuille_core::steady::solve_steady;
use poiseuille_core::unsteady::{run, DtPolicy, Field, InitialCondition, RunOptions, Scheme, Termination};

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn global_fixture() -> (ModelParams, PressureProfile, InitialCondition) {
    let p = ModelParams::new(2.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let b = PressureProfile::polynomial(vec![1.0, 0.0, -0.3], 1.0).unwrap();
    let ic = InitialCondition::compatible_quartic(b.value(1.0), 1.0);
    (p, b, ic)
}

fn fixed(cells: usize, t_end: f64, dt: f64) -> RunOptions {
    RunOptions { cells, t_end, dt: DtPolicy::Fixed { dt }, ..Default::default() }
}

#[test]
fn steady_state_persists_for_100_steps() {
    let (p, b, _) = global_fixture();
    let s = solve_steady(&p, &b, 256).unwrap();
    let scheme = Scheme::new(&p, &b, 256);
    let mut f = Field::new(scheme.grid, 0.0, s.equilibrium());
    for _ in 0..100 {
        f = scheme.advance(&f, 1e-2).unwrap();
        let r = scheme.rhs(&f.u);
        assert!(r[..256].iter().all(|x| x.abs() <= scheme.tolerance()));
    }
}

#[test]
fn grid_refinement_is_second_order() {
    let (p, b, ic) = global_fixture();
    let sols: Vec<Vec<f64>> = [64usize, 128, 256, 512].iter().map(|&n| run(&ic, &p, &b, &fixed(n, 0.5, 1e-2)).unwrap().final_field.u).collect();
    let diff = |c: &[f64], f: &[f64]| (0..c.len()).map(|i| (c[i] - f[2 * i]).abs()).fold(0.0, f64::max);
    let d: Vec<f64> = (0..3).map(|k| diff(&sols[k], &sols[k + 1])).collect();
    assert!(d[0] / d[1] >= 3.5 && d[1] / d[2] >= 3.5, "{d:?}");
}

#[test]
fn regularization_differences_shrink() {
    let (_, b, ic) = global_fixture();
    let u: Vec<Vec<f64>> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let p = ModelParams::new(2.0, 2.0, 1.0, 0.5, 1.0).unwrap().with_eps(eps).unwrap();
            run(&ic, &p, &b, &fixed(128, 0.5, 1e-2)).unwrap().final_field.u
        })
        .collect();
    assert!(sup_diff(&u[1], &u[2]) < sup_diff(&u[0], &u[1]));
}

#[test]
fn discrete_solution_respects_parabolic_bound() {
    let (p, b, ic) = global_fixture();
    let set = BoundsSet::compute(&ic, &b, &p, 10.0);
    let opts = RunOptions { cells: 128, t_end: 3.0, output_times: vec![0.5, 1.0, 2.0], ..Default::default() };
    let r = run(&ic, &p, &b, &opts).unwrap();
    assert_eq!(r.termination, Termination::ReachedTend);
    let h = 1.0 / 128.0;
    for f in r.snapshots.iter().chain(std::iter::once(&r.final_field)) {
        for (i, &u) in f.u.iter().enumerate() {
            let y = f.grid.node(i);
            assert!(u.abs() <= set.k1 * (1.0 - y * y) + SLACK_FACTOR * h * h);
        }
    }
    assert_eq!(r.monitor_log.len(), r.final_field.step_count);
    assert!(r.all_monitors_passed());
}

#[test]
fn snapshots_land_on_requested_times() {
    let (p, b, ic) = global_fixture();
    let opts = RunOptions { cells: 64, t_end: 1.0, output_times: vec![0.0, 0.1, 0.25, 1.0], ..Default::default() };
    let r = run(&ic, &p, &b, &opts).unwrap();
    let times: Vec<f64> = r.snapshots.iter().map(|f| f.t).collect();
    assert_eq!(times, vec![0.0, 0.1, 0.25, 1.0]);
}

#[test]
fn approaches_the_steady_state() {
    let (p, b, ic) = global_fixture();
    let r = run(&ic, &p, &b, &RunOptions { cells: 128, t_end: 40.0, ..Default::default() }).unwrap();
    let s = solve_steady(&p, &b, 128).unwrap();
    assert!(sup_diff(&r.final_field.u, &s.equilibrium()) < 1e-6);
}

#[test]
fn incompatible_initial_data_is_refused() {
    let (p, b, _) = global_fixture();
    assert!(run(&InitialCondition::zero(), &p, &b, &RunOptions::default()).is_err());
}

#[test]
fn peaked_case_stops_before_lambda() {
    let p = ModelParams::new(-1.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let b = PressureProfile::polynomial(vec![0.5, 0.0, -0.5], 0.5).unwrap();
    let ic = InitialCondition::polynomial(vec![-0.05, 0.0, 0.15, 0.0, -0.15, 0.0, 0.05]);
    let r = run(&ic, &p, &b, &RunOptions { cells: 128, t_end: 5.0, ..Default::default() }).unwrap();
    assert_eq!(r.termination, Termination::ReachedLambda);
    assert!((r.final_field.t - 0.95 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn backward_regime_stops_the_run() {
    // gradient well past the critical rate from the start
    let p = ModelParams::new(-1.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let b = PressureProfile::polynomial(vec![0.0], 1.0).unwrap();
    let ic = InitialCondition::polynomial(vec![2.0, 0.0, -6.0, 0.0, 6.0, 0.0, -2.0]);
    let mut opts = RunOptions { cells: 64, t_end: 0.1, override_hypotheses: true, ..Default::default() };
    let r = run(&ic, &p, &b, &opts).unwrap();
    assert_eq!(r.termination, Termination::BackwardRegimeDetected);
    assert_eq!(r.final_field.step_count, 1);
    opts.override_backward = true;
    opts.dt = DtPolicy::Fixed { dt: 1e-4 };
    opts.t_end = 1e-3;
    let r = run(&ic, &p, &b, &opts).unwrap();
    assert!(r.non_physical);
}

#[test]
fn hypotheses_gate_saturating_case() {
    let p = ModelParams::new(0.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let b = PressureProfile::constant(2.5).unwrap();
    let ic = InitialCondition::compatible_quartic(2.5, 1.0);
    assert!(run(&ic, &p, &b, &RunOptions::default()).is_err());
}
