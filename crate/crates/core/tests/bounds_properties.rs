use poiseuille_core::bounds::{compute_k2, compute_k3, BoundsSet, FlowCase};
use poiseuille_core::pressure::PressureProfile;
use poiseuille_core::rheology::ModelParams;
use poiseuille_core::unsteady::InitialCondition;
use proptest::prelude::*;

/// Brute-force K2 on 10⁵ points, written directly from the formula.
fn k2_oracle(a: f64, b0: f64, p: &ModelParams) -> f64 {
    // Ψ = a (1 - Y²)², Ψ' = -4aY(1 - Y²), Ψ'' = -4a(1 - 3Y²)
    let m = 100_000;
    let (mut s1, mut s2): (f64, f64) = (0.0, 0.0);
    for j in 0..=m {
        let y = j as f64 / m as f64;
        let d1 = -4.0 * a * y * (1.0 - y * y);
        let d2 = -4.0 * a * (1.0 - 3.0 * y * y);
        let t = (p.kappa * d1.abs()).powf(p.alpha);
        let phi = (1.0 + p.n * t) * (1.0 + t).powf((p.n - 1.0 - p.alpha) / p.alpha);
        s1 = s1.max((phi * d2).abs());
        let ratio = if y == 0.0 { d2.abs() } else { (d1 / y).abs() };
        s2 = s2.max((1.0 + t).powf((p.n - 1.0) / p.alpha) * ratio);
    }
    (s1 + s2 + b0) / (8.0 * p.beta * p.beta)
}

#[test]
fn k2_matches_dense_oracle() {
    for n in [2.0, 0.5, -0.5] {
        let p = ModelParams::new(n, 1.5, 1.0, 0.7, 1.0).unwrap();
        let b = PressureProfile::polynomial(vec![1.2, 0.0, -0.4], 1.2).unwrap();
        let ic = InitialCondition::compatible_quartic(0.8, 1.0);
        let got = compute_k2(&ic, &b, &p);
        assert!((got - k2_oracle(-0.1, 1.2, &p)).abs() < 1e-8, "n={n}");
    }
}

#[test]
fn case_gating() {
    let b = PressureProfile::constant(1.0).unwrap();
    let ic = InitialCondition::compatible_quartic(1.0, 1.0);
    let global = BoundsSet::compute(&ic, &b, &ModelParams::new(2.0, 2.0, 1.0, 0.5, 1.0).unwrap(), 10.0);
    assert_eq!(global.case, FlowCase::Global);
    assert!(global.k4.is_some() && global.lambda.is_none() && global.horizon_cap.is_none());

    let bp = PressureProfile::polynomial(vec![0.5, 0.0, -0.5], 0.5).unwrap();
    let icp = InitialCondition::polynomial(vec![-0.05, 0.0, 0.15, 0.0, -0.15, 0.0, 0.05]);
    let peaked = BoundsSet::compute(&icp, &bp, &ModelParams::new(-1.0, 2.0, 1.0, 0.5, 1.0).unwrap(), 10.0);
    assert_eq!(peaked.case, FlowCase::Peaked);
    assert!(peaked.k4.is_none());
    assert_eq!(peaked.eta0, Some(1.0));
    assert!((peaked.k5.unwrap() - 0.5).abs() < 1e-12);
    assert!((peaked.lambda.unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(peaked.hypotheses.satisfied);
    assert_eq!(peaked.envelope_factor, 2.0);
}

#[test]
fn constants_do_not_depend_on_eps() {
    let b = PressureProfile::polynomial(vec![1.0, -0.5], 1.0).unwrap();
    let ic = InitialCondition::compatible_quartic(0.5, 1.0);
    let base = ModelParams::new(0.5, 2.0, 1.0, 0.5, 1.0).unwrap();
    let a = BoundsSet::compute(&ic, &b, &base.with_eps(1e-2).unwrap(), 10.0);
    let c = BoundsSet::compute(&ic, &b, &base.with_eps(1e-4).unwrap(), 10.0);
    assert_eq!(a, c);
}

#[test]
fn recomputation_is_bit_identical() {
    let b = PressureProfile::constant(1.0).unwrap();
    let ic = InitialCondition::compatible_quartic(1.0, 1.0);
    let p = ModelParams::new(2.0, 2.0, 1.0, 0.5, 1.0).unwrap();
    let round_trip: ModelParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    let a = BoundsSet::compute(&ic, &b, &p, 10.0);
    let c = BoundsSet::compute(&ic, &b, &round_trip, 10.0);
    assert_eq!(a.k3.to_bits(), c.k3.to_bits());
}

proptest! {
    #[test]
    fn k3_increases_with_inputs(b0 in 0.1f64..5.0, k2 in 0.0f64..10.0, beta in 0.1f64..2.0, bump in 1e-3f64..1.0) {
        let p = ModelParams::new(2.0, 2.0, 1.0, beta, 1.0).unwrap();
        let b = PressureProfile::constant(b0).unwrap();
        let bigger = PressureProfile::constant(b0 + bump).unwrap();
        prop_assert!(compute_k3(k2 + bump, &b, &p) > compute_k3(k2, &b, &p));
        prop_assert!(compute_k3(k2, &bigger, &p) > compute_k3(k2, &b, &p));
    }
}
