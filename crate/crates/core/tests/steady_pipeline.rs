use poiseuille_core::pressure::{b_integral, PressureProfile};
use poiseuille_core::rheology::{flux, ModelParams};
use poiseuille_core::steady::{check_existence, solve_steady, steady_residual, GradientEstimate, Verdict};

fn newtonian_exact(b0: f64, eps: f64, y: f64) -> f64 {
    -b0 * ((1.0 - y * y) / 4.0 + eps * (1.0 - y) / 2.0 - 0.5 * eps * eps * ((1.0 + eps) / (y + eps)).ln())
}

#[test]
fn newtonian_profile_is_parabolic() {
    let p = ModelParams::new(1.0, 2.0, 0.0, 0.5, 1.0).unwrap().with_eps(1e-6).unwrap();
    let b = PressureProfile::constant(4.0).unwrap();
    let s = solve_steady(&p, &b, 1024).unwrap();
    assert!((s.v[0] + 1.0).abs() < 1e-4);
    for (y, v) in s.grid.iter().zip(&s.v) {
        assert!((v + (1.0 - y * y)).abs() < 1e-4);
        assert!((v - newtonian_exact(4.0, 1e-6, *y)).abs() < 1e-10);
    }
    assert!(steady_residual(&s, &b, &p) < 1e-4);
}

#[test]
fn identity_and_estimate_hold_across_regimes() {
    let b = PressureProfile::polynomial(vec![0.6, 0.8, -0.9], 1.0).unwrap();
    for (n, alpha) in [(2.0, 2.0), (0.5, 1.5), (1.0, 2.0), (0.0, 2.0), (-1.0, 2.0)] {
        let p = ModelParams::new(n, alpha, 1.0, 0.5, 1.0).unwrap();
        let s = solve_steady(&p, &b, 300).unwrap();
        for (i, &g) in s.v_y.iter().enumerate() {
            let oracle = b_integral(s.grid[i], p.eps, &b);
            assert!((flux(g, &p) - oracle).abs() < 1e-9, "n={n} i={i}");
        }
        assert!(s.v[..300].iter().all(|&v| v < 0.0));
        match s.gradient_estimate(&p, &b) {
            GradientEstimate::Checked { passed, .. } => assert!(passed, "n={n}"),
            GradientEstimate::NotApplicable { .. } => assert!(n <= 0.0),
        }
    }
}

#[test]
fn independent_grids_agree() {
    let p = ModelParams::new(0.5, 2.0, 1.0, 0.5, 1.0).unwrap();
    let b = PressureProfile::polynomial(vec![1.0, -0.4], 1.0).unwrap();
    let coarse = solve_steady(&p, &b, 200).unwrap();
    let fine = solve_steady(&p, &b, 800).unwrap();
    for i in 0..=200 {
        assert!((coarse.v[i] - fine.v[4 * i]).abs() < 1e-5);
    }
}

#[test]
fn peaked_flux_threshold_straddle() {
    let p = ModelParams::new(-1.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let eps = p.eps;
    // constant b: sup B_ε = b₀(R²/2 + εR)/(R + ε)
    let b_for = |target: f64| target * (1.0 + eps) / (0.5 + eps);
    let below = check_existence(&p, &PressureProfile::constant(b_for(0.45)).unwrap());
    let above = check_existence(&p, &PressureProfile::constant(b_for(0.55)).unwrap());
    assert_eq!(below.verdict, Verdict::Classical);
    assert_eq!(above.verdict, Verdict::None);
    assert!((below.threshold.unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn residual_converges_at_second_order() {
    let p = ModelParams::new(2.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let b = PressureProfile::polynomial(vec![1.0, 0.0, -0.6, 0.2], 1.0).unwrap();
    let r: Vec<f64> = [256usize, 512, 1024].iter().map(|&n| steady_residual(&solve_steady(&p, &b, n).unwrap(), &b, &p)).collect();
    for w in r.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{r:?}");
    }
}
