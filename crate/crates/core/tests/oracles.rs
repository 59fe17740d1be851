//! Library results against the reference computations in `support`.

mod support;

use gbayes_core::blyth::{a_log_value, q2_constant};
use gbayes_core::estimator::{shrink_fraction, EstimatorSpec, Mode};
use gbayes_core::numerics::QuadratureSpec;
use gbayes_core::prior::{HyperParams, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[test]
fn reference_log_gamma_is_sound() {
    assert!((support::ln_gamma(1.0)).abs() < 1e-14);
    assert!((support::ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-13);
    assert!((support::ln_gamma(11.0) - 3628800f64.ln()).abs() < 1e-12);
}

#[test]
fn shrink_fraction_matches_two_dimensional_posterior() {
    let mut rng = ChaCha20Rng::seed_from_u64(20);
    for _ in 0..8 {
        let p = rng.random_range(3..=16usize);
        let n = rng.random_range(3..=16usize);
        let a = rng.random_range(-0.9..(n as f64 / 2.0 - 1.1));
        let b = rng.random_range(-0.45..4.0);
        let w = 10f64.powf(rng.random_range(-3.0..4.0));
        let spec = EstimatorSpec::new(
            Problem::new(p, n).unwrap(),
            HyperParams::new(a, b).unwrap(),
            Mode::GeneralQuadrature,
            QuadratureSpec::default(),
        )
        .unwrap();
        let got = shrink_fraction(w, &spec).unwrap();
        let want = support::shrink_oracle(w, p, n, a, b);
        assert!((got - want).abs() <= 1e-8 * want, "p={p} n={n} a={a} b={b} w={w}: {got} vs {want}");
    }
}

#[test]
fn a_matches_negative_binomial_reduction() {
    let problem = Problem::new(5, 5).unwrap();
    let hyper = HyperParams::new(-0.5, 0.0).unwrap();
    let spec = QuadratureSpec::default();
    for &(x, s) in &[(0.0, 1.0), (1.0, 1.0), (1.0, 0.3), (2.5, 4.0), (0.5, 20.0)] {
        let got = a_log_value(x, s, &problem, &hyper, &spec).unwrap();
        let want = support::a_log_oracle(x, s, 5, 5, -0.5, 0.0);
        assert!((got - want).abs() < 1e-9, "x={x} s={s}: {got} vs {want}");
    }
    let problem = Problem::new(3, 8).unwrap();
    let hyper = HyperParams::new(1.0, -0.3).unwrap();
    let got = a_log_value(1.5, 0.7, &problem, &hyper, &spec).unwrap();
    let want = support::a_log_oracle(1.5, 0.7, 3, 8, 1.0, -0.3);
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn q2_matches_trapezoid_reference() {
    let spec = QuadratureSpec::default();
    let problem = Problem::new(4, 5).unwrap();
    let hyper = HyperParams::new(0.0, 0.0).unwrap();
    let want = support::q2_oracle_p4(0.0, 0.0, 1e-4);
    // Halving the step leaves the reference unchanged.
    assert!((support::q2_oracle_p4(0.0, 0.0, 2e-4) - want).abs() < 1e-12);
    let got = q2_constant(&problem, &hyper, &spec).unwrap();
    assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    let hyper = HyperParams::new(1.5, -0.3).unwrap();
    let got = q2_constant(&problem, &hyper, &spec).unwrap();
    let want = support::q2_oracle_p4(1.5, -0.3, 1e-4);
    assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
}
