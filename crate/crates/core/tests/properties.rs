//! Randomized invariants across the public API.

use gbayes_core::blyth::{a_value, b_i_moments, inequality_suite, q2_constant};
use gbayes_core::estimator::{phi, shrink_fraction, EstimatorSpec, Mode, MONOTONE_TOLERANCE};
use gbayes_core::numerics::QuadratureSpec;
use gbayes_core::prior::{HyperParams, Problem};
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_nondecreasing_for_nonnegative_b(
        p in 3usize..20, n in 3usize..20, a_frac in 0.0f64..1.0, b in 0.0f64..6.0,
        lw in -3.0f64..6.0, step in 0.01f64..2.0,
    ) {
        let a = -0.95 + a_frac * (n as f64 / 2.0 - 1.0 + 0.9);
        let est = EstimatorSpec::new(
            Problem::new(p, n).unwrap(), HyperParams::new(a, b).unwrap(), Mode::GeneralQuadrature, spec(),
        ).unwrap();
        let w1 = 10f64.powf(lw);
        let w2 = 10f64.powf(lw + step);
        let (f1, f2) = (phi(w1, &est).unwrap(), phi(w2, &est).unwrap());
        prop_assert!(f1 <= f2 * (1.0 + MONOTONE_TOLERANCE), "{} > {}", f1, f2);
        let s = shrink_fraction(w1, &est).unwrap();
        prop_assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn b_i_respects_cauchy_schwarz(
        p in 1usize..12, n in 1usize..12, a_frac in 0.0f64..0.95, b in -0.9f64..4.0,
        ls in -6.0f64..6.0, z in 0.0f64..0.99, i in 1u32..200,
    ) {
        let a = -0.95 + a_frac * (n as f64 / 2.0 + 0.95);
        let m = b_i_moments(
            10f64.powf(ls), z, i, &Problem::new(p, n).unwrap(), &HyperParams::new(a, b).unwrap(), &spec(),
        ).unwrap();
        prop_assert!(m.mean * m.mean <= m.second_moment);
        prop_assert!(m.b >= 0.0 && m.b < 1.0, "b = {}", m.b);
    }

    #[test]
    fn q2_exceeds_one(p in 2usize..15, a in -0.95f64..5.0, b in -0.45f64..5.0) {
        let q = q2_constant(&Problem::new(p, 4).unwrap(), &HyperParams::new(a, b).unwrap(), &spec()).unwrap();
        prop_assert!(q > 1.0, "{}", q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn a_is_positive(p in 3usize..8, n in 2usize..8, x in 0.0f64..3.0, ls in -1.0f64..2.0, b in -0.45f64..2.0) {
        let v = a_value(x, 10f64.powf(ls), &Problem::new(p, n).unwrap(), &HyperParams::new(0.0, b).unwrap(), &spec()).unwrap();
        prop_assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn inequalities_hold_for_any_seed(seed in any::<u64>()) {
        let report = inequality_suite(2000, seed).unwrap();
        prop_assert!(report.passed, "{:?}", report.note);
    }
}
