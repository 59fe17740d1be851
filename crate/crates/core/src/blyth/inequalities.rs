//! Randomized pointwise checks of the elementary inequalities used to bound
//! `B_i` and `A`.
//!
//! Each check reports a margin `(lhs - rhs) / scale` for an inequality of the
//! form `lhs ≤ rhs`, where `scale` is the size of the terms involved; a
//! margin above [`ROUNDOFF_SLACK`] is a violation. The slack only absorbs
//! rounding at points where a bound is attained.

use std::collections::BTreeMap;

use rand::Rng;

use super::{BoundCheckReport, DetailRecord};
use crate::error::{domain, Result};
use crate::numerics::log_sum_exp;
use crate::risk::stream_rng;

pub const MIN_INEQUALITY_SAMPLES: usize = 1000;
/// Largest scaled margin treated as rounding rather than a violation.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

struct Check {
    name: &'static str,
    margin: f64,
}

struct Tally {
    name: &'static str,
    samples: usize,
    violations: usize,
    worst: f64,
}

fn log_uniform<R: Rng>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

fn index<R: Rng>(rng: &mut R) -> f64 {
    log_uniform(rng, 0.0, 4.0).floor()
}

/// `y^{-c1} e^{-c2/y} < (c1/c2)^{c1}` for `y > 0`, `c1 > c2 > 0`, in logs.
fn b3(y: f64, c1: f64, c2: f64) -> Vec<Check> {
    let lhs = -c1 * y.ln() - c2 / y;
    let rhs = c1 * (c1 / c2).ln();
    vec![Check {
        name: "b3",
        margin: (lhs - rhs) / (lhs.abs() + rhs.abs()).max(1.0),
    }]
}

/// The three bounds on `R = D/(D + u)` with `D = i + ln(1/s)`, `u = ln v`,
/// for `s < 1 ≤ ...` and `v ≥ s`. With `sign = -1` and `D = i + ln s` the same
/// computation gives the bounds for `s > 1`, `v ≤ s`.
fn ratio_bounds(name: [&'static str; 3], d: f64, u: f64, sign: f64) -> Vec<Check> {
    let r = d / (d + sign * u);
    let a = u.abs();
    let lin = sign * u / d;
    let cubic = a.powi(3) / (d * d);
    let quad = a * a / (d * d);
    let poly: f64 = (2..=6).map(|k| a.powi(k)).sum::<f64>() / (d * d);
    let lower = 1.0 - lin - cubic;
    let upper = 1.0 - lin + quad + cubic;
    let square = 1.0 - 2.0 * lin + 4.0 * poly;
    let scale1 = 1.0 + lin.abs() + quad + cubic + r;
    let scale2 = 1.0 + 2.0 * lin.abs() + 4.0 * poly + r * r;
    vec![
        Check {
            name: name[0],
            margin: (lower - r) / scale1,
        },
        Check {
            name: name[1],
            margin: (r - upper) / scale1,
        },
        Check {
            name: name[2],
            margin: (r * r - square) / scale2,
        },
    ]
}

/// `|ln x| ≤ 1/(ε x^ε)` on `(0, 1)`, in logs.
fn b6_log(x: f64, eps: f64) -> Vec<Check> {
    let lhs = x.ln().abs().ln();
    let rhs = -eps.ln() - eps * x.ln();
    vec![Check {
        name: "b6_log",
        margin: (lhs - rhs) / rhs.abs().max(1.0),
    }]
}

/// `|ln x|^k ≤ (x^{kε} + x^{-kε}) / ε^k` on `(0, ∞)`, in logs.
fn b6_power(x: f64, k: f64, eps: f64) -> Vec<Check> {
    let lx = x.ln();
    let lhs = k * lx.abs().ln();
    let rhs = log_sum_exp(&[k * eps * lx, -k * eps * lx]) - k * eps.ln();
    vec![Check {
        name: "b6_power",
        margin: (lhs - rhs) / rhs.abs().max(1.0),
    }]
}

/// Draws `sample_count` points in the domain of each inequality and checks
/// every bound there. `lemma` streams are independent, so adding samples to
/// one does not reshuffle another.
pub fn inequality_suite(sample_count: usize, seed: u64) -> Result<BoundCheckReport> {
    if sample_count < MIN_INEQUALITY_SAMPLES {
        return Err(domain(
            "inequality_suite",
            format!("sample_count must be at least {MIN_INEQUALITY_SAMPLES}, got {sample_count}"),
        ));
    }
    type Sampler = fn(&mut rand_chacha::ChaCha20Rng) -> (Vec<(&'static str, f64)>, Vec<Check>);
    let lemmas: [(&str, Sampler); 5] = [
        ("b3", |rng| {
            let c2 = log_uniform(rng, -3.0, 3.0);
            let c1 = c2 * (1.0 + log_uniform(rng, -3.0, 2.0));
            let y = (c2 / c1) * log_uniform(rng, -4.0, 4.0);
            (vec![("y", y), ("c1", c1), ("c2", c2)], b3(y, c1, c2))
        }),
        ("b4", |rng| {
            let i = index(rng);
            let s = log_uniform(rng, -12.0, 0.0);
            let v = (s.ln() + log_uniform(rng, -6.0, 1.8)).exp();
            let d = i + (1.0 / s).ln();
            (
                vec![("i", i), ("s", s), ("v", v)],
                ratio_bounds(["b4_lower", "b4_upper", "b4_square"], d, v.ln(), 1.0),
            )
        }),
        ("b5", |rng| {
            let i = index(rng);
            let s = log_uniform(rng, 1e-9, 12.0);
            let v = (s.ln() - log_uniform(rng, -6.0, 1.8)).exp();
            let d = i + s.ln();
            (
                vec![("i", i), ("s", s), ("v", v)],
                ratio_bounds(["b5_lower", "b5_upper", "b5_square"], d, v.ln(), -1.0),
            )
        }),
        ("b6_log", |rng| {
            let x = (-log_uniform(rng, -8.0, 2.0)).exp();
            let eps = log_uniform(rng, -3.0, 1.0);
            (vec![("x", x), ("eps", eps)], b6_log(x, eps))
        }),
        ("b6_power", |rng| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let x = (sign * log_uniform(rng, -8.0, 1.7)).exp();
            let k = log_uniform(rng, -1.0, 1.0);
            let eps = log_uniform(rng, -2.0, 1.0);
            (vec![("x", x), ("k", k), ("eps", eps)], b6_power(x, k, eps))
        }),
    ];

    let mut tallies: Vec<Tally> = Vec::new();
    let mut first_violation: Option<String> = None;
    for (stream, (_, sampler)) in lemmas.iter().enumerate() {
        let mut rng = stream_rng(seed, stream as u64);
        for _ in 0..sample_count {
            let (inputs, checks) = sampler(&mut rng);
            for check in checks {
                let tally = match tallies.iter_mut().position(|t| t.name == check.name) {
                    Some(k) => &mut tallies[k],
                    None => {
                        tallies.push(Tally {
                            name: check.name,
                            samples: 0,
                            violations: 0,
                            worst: f64::NEG_INFINITY,
                        });
                        tallies.last_mut().expect("just pushed")
                    }
                };
                tally.samples += 1;
                // NaN margins count as violations.
                let bad = !(check.margin <= ROUNDOFF_SLACK);
                if bad {
                    tally.violations += 1;
                    if first_violation.is_none() {
                        let args: Vec<String> = inputs.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
                        first_violation =
                            Some(format!("{}: {} (margin {:e})", check.name, args.join(", "), check.margin));
                    }
                }
                tally.worst = if check.margin.is_nan() { f64::NAN } else { tally.worst.max(check.margin) };
            }
        }
    }

    let sup = tallies
        .iter()
        .map(|t| t.worst)
        .fold(f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
    let violations: usize = tallies.iter().map(|t| t.violations).sum();
    let details = tallies
        .iter()
        .map(|t| {
            DetailRecord::new(
                t.name,
                &[
                    ("samples", t.samples as f64),
                    ("violations", t.violations as f64),
                    ("worst_margin", t.worst),
                ],
            )
        })
        .collect();
    let mut summary = BTreeMap::new();
    summary.insert("violations".to_string(), violations as f64);
    summary.insert("samples_per_lemma".to_string(), sample_count as f64);
    Ok(BoundCheckReport {
        quantity: "inequalities".into(),
        grid: format!("{sample_count} random points per lemma, seed {seed}"),
        sup_statistic: sup,
        cap: ROUNDOFF_SLACK,
        passed: violations == 0 && sup.is_finite() && sup <= ROUNDOFF_SLACK,
        summary,
        details,
        note: first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b3_example() {
        // y^{-2} e^{-1/y} peaks at y = 1/2 with value 4e^{-2}.
        let peak: f64 = 4.0 * (-2.0f64).exp();
        assert!((peak - 0.5413411329464508).abs() < 1e-15);
        let at = |y: f64| y.powi(-2) * (-1.0 / y).exp();
        assert!((at(0.5) - peak).abs() < 1e-15);
        assert!(at(0.49) < peak && at(0.51) < peak);
        assert!(b3(0.5, 2.0, 1.0)[0].margin < 0.0);
    }

    #[test]
    fn b6_example() {
        assert!((0.5f64.ln().abs() - std::f64::consts::LN_2).abs() < 1e-16);
        assert!(b6_log(0.5, 1.0)[0].margin < 0.0);
    }

    #[test]
    fn ratio_bounds_are_exact_at_unit_v() {
        // ln v = 0 makes R = 1 and every bound equal to 1.
        for checks in [ratio_bounds(["a", "b", "c"], 7.3, 0.0, 1.0), ratio_bounds(["a", "b", "c"], 2.0, 0.0, -1.0)] {
            for c in checks {
                assert_eq!(c.margin, 0.0);
            }
        }
    }

    #[test]
    fn upper_bound_is_attained_at_the_edge() {
        // i = 1, v = s: R = D and the upper bound equals D too.
        let s: f64 = 1e-3;
        let d = 1.0 + (1.0 / s).ln();
        let checks = ratio_bounds(["a", "b", "c"], d, s.ln(), 1.0);
        assert!(checks[1].margin.abs() < 1e-14, "{}", checks[1].margin);
    }

    #[test]
    fn detects_a_false_inequality() {
        // Dropping the cubic term from the upper bound breaks it for v < 1.
        let d: f64 = 3.0;
        let u: f64 = -1.5;
        let r = d / (d + u);
        assert!(r > 1.0 - u / d + u * u / (d * d));
        assert!(ratio_bounds(["a", "b", "c"], d, u, 1.0)[1].margin <= 0.0);
    }

    #[test]
    fn suite_is_clean_and_reproducible() {
        let a = inequality_suite(2000, 11).unwrap();
        assert!(a.passed, "{:?}", a.note);
        assert_eq!(a, inequality_suite(2000, 11).unwrap());
        assert!(inequality_suite(999, 11).is_err());
    }
}
