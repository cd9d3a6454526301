use poiseuille_core::pressure::{b_integral, b_integral_sup, validate_profile, PressureProfile};
use proptest::prelude::*;

fn admissible() -> impl Strategy<Value = PressureProfile> {
    // b = c0 + c1 Y + c2 Y² kept nonnegative on [0,1] by construction
    (0.05f64..2.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(c0, c1, c2)| {
        let coeffs = vec![c0 + 2.0, c1, c2];
        let b0 = c0 + 2.0 + c1.abs() + c2.abs();
        PressureProfile::polynomial(coeffs, b0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn supremum_obeys_global_cap(b in admissible(), eps0 in 1e-3f64..0.05) {
        validate_profile(&b, 1.0).unwrap();
        let (sup, at) = b_integral_sup(eps0, &b, 1.0);
        prop_assert!(sup <= 0.5 * b.b0 * (1.0 + eps0));
        prop_assert!((0.0..=1.0).contains(&at));
    }

    #[test]
    fn grows_with_regularization(b in admissible(), y in 0.0f64..1.0, eps in 1e-5f64..1e-2) {
        prop_assert!(b_integral(y, eps, &b) <= b_integral(y, 1e-2, &b) + 1e-14);
        prop_assert!(b_integral(y, eps, &b) >= 0.0);
    }
}
