//! Truncated Poisson probability sequences.

use crate::error::{domain, Result};

/// Poisson(`mean`) probabilities `(j, e^{-mean} mean^j / j!)` for
/// `j = 0..=J`, where `J` is the first index whose remaining upper tail is
/// certified below `tail_tolerance`.
///
/// The tail after `J` is bounded by `w_{J+1} / (1 - mean / (J + 2))` once
/// `J + 2 > mean` (geometric domination of the term ratios).
pub fn poisson_weights(mean: f64, tail_tolerance: f64) -> Result<Vec<(usize, f64)>> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(domain("poisson_weights", format!("mean must be finite and nonnegative, got {mean}")));
    }
    if !(tail_tolerance > 0.0) {
        return Err(domain("poisson_weights", format!("tail tolerance must be positive, got {tail_tolerance}")));
    }
    if mean == 0.0 {
        return Ok(vec![(0, 1.0)]);
    }
    // Ratios to the modal term, built outward from the mode so each ratio
    // carries only a few roundings; normalizing by their sum avoids the
    // cancellation of evaluating e^{-mean} mean^j / j! directly.
    let mode = mean.floor() as usize;
    let floor = (tail_tolerance.min(1e-16)) * 1e-6;
    let mut upper = vec![1.0f64];
    let mut j = mode;
    loop {
        j += 1;
        let next = upper[upper.len() - 1] * mean / j as f64;
        upper.push(next);
        if j as f64 > mean + 1.0 && next < floor {
            break;
        }
    }
    let mut lower = Vec::with_capacity(mode);
    let mut r = 1.0f64;
    for k in (0..mode).rev() {
        r *= (k + 1) as f64 / mean;
        lower.push(r);
        if r == 0.0 {
            break;
        }
    }
    lower.resize(mode, 0.0);
    lower.reverse();
    let mut ratios = lower;
    ratios.extend(upper);
    let total: f64 = ratios.iter().sum();

    let mut out = Vec::new();
    for (j, r) in ratios.iter().enumerate() {
        out.push((j, r / total));
        let ratio_cap = mean / (j as f64 + 2.0);
        if ratio_cap < 1.0 {
            if let Some(next) = ratios.get(j + 1) {
                if next / total / (1.0 - ratio_cap) < tail_tolerance {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// The central stretch `j = start..start + weights.len()` of a Poisson law.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWindow {
    pub start: usize,
    pub weights: Vec<f64>,
}

/// Poisson(`mean`) probabilities restricted to a window around the mode
/// whose two omitted tails each have certified mass below `tail_tolerance`.
/// Costs `O(sqrt(mean))`, unlike [`poisson_weights`] which starts at `j = 0`.
///
/// Term ratios fall geometrically away from the mode: below index `k < mean`
/// the tail is at most `w_k (k/mean) / (1 - k/mean)`, and above `k > mean` it
/// is at most `w_k mean/(k+1) / (1 - mean/(k+1))`.
pub fn poisson_window(mean: f64, tail_tolerance: f64) -> Result<PoissonWindow> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(domain("poisson_window", format!("mean must be finite and nonnegative, got {mean}")));
    }
    if !(tail_tolerance > 0.0) {
        return Err(domain("poisson_window", format!("tail tolerance must be positive, got {tail_tolerance}")));
    }
    if mean == 0.0 {
        return Ok(PoissonWindow {
            start: 0,
            weights: vec![1.0],
        });
    }
    let mode = mean.floor() as usize;
    // Ratios to the modal term; their sum is at least 1, so a bound on
    // omitted ratios bounds the omitted normalized mass.
    let mut upper = vec![1.0f64];
    let mut j = mode;
    let mut last = 1.0f64;
    loop {
        // The quotient does not depend on `last`, keeping the division off
        // the loop-carried chain.
        let next = last * (mean / (j + 1) as f64);
        // next / (1 - mean/(j+2)) < tol, without the division.
        let room = (j + 2) as f64 - mean;
        if room > 0.0 && next * ((j + 2) as f64) < tail_tolerance * room {
            break;
        }
        upper.push(next);
        last = next;
        j += 1;
    }
    let mut lower = Vec::new();
    let mut r = 1.0f64;
    let mut k = mode;
    while k > 0 {
        // r is the ratio at index k; the term at k - 1 is r·k/mean.
        let next = r * (k as f64 / mean);
        let room = mean - (k - 1) as f64;
        if room > 0.0 && next * mean < tail_tolerance * room {
            break;
        }
        lower.push(next);
        r = next;
        k -= 1;
    }
    let start = mode - lower.len();
    lower.reverse();
    lower.extend(upper);
    let scale = 1.0 / lower.iter().sum::<f64>();
    lower.iter_mut().for_each(|w| *w *= scale);
    Ok(PoissonWindow { start, weights: lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn central_case_is_a_point_mass() {
        assert_eq!(poisson_weights(0.0, 1e-12).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn unit_mean_matches_factorial_series() {
        let w = poisson_weights(1.0, 1e-12).unwrap();
        let mut fact = 1.0;
        for (j, wj) in &w {
            if *j > 0 {
                fact *= *j as f64;
            }
            let exact = (-1.0f64).exp() / fact;
            assert!((wj - exact).abs() < 1e-15 * exact.max(1e-300) + 1e-18);
        }
        let total: f64 = w.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_index_has_small_tail() {
        let w = poisson_weights(5.0, 1e-12).unwrap();
        let last = w.last().unwrap().0;
        // Upper tail by direct summation far past the cut.
        let mut term = (-5.0f64).exp();
        let mut tail = 0.0;
        for k in 1..400usize {
            term *= 5.0 / k as f64;
            if k > last {
                tail += term;
            }
        }
        assert!(tail < 1e-12, "tail {tail} at J={last}");
    }

    #[test]
    fn rejects_invalid_arguments() {
        assert!(poisson_weights(-1.0, 1e-12).is_err());
        assert!(poisson_weights(1.0, 0.0).is_err());
        assert!(poisson_weights(f64::NAN, 1e-12).is_err());
    }

    #[test]
    fn window_matches_full_sequence() {
        for mean in [0.3, 4.0, 37.5, 400.0] {
            let full = poisson_weights(mean, 1e-14).unwrap();
            let win = poisson_window(mean, 1e-14).unwrap();
            for (k, w) in win.weights.iter().enumerate() {
                let Some(&(_, exact)) = full.get(win.start + k) else {
                    assert!(*w < 1e-14);
                    continue;
                };
                assert!((w - exact).abs() <= 1e-13 * exact + 1e-14, "mean={mean} j={}", win.start + k);
            }
        }
        let big = poisson_window(1e6, 1e-12).unwrap();
        assert!(big.weights.len() < 20_000);
        assert!(big.start > 990_000);
    }

    proptest! {
        #[test]
        fn window_mass_is_within_tolerance(mean in 0.0f64..1e5) {
            let w = poisson_window(mean, 1e-12).unwrap();
            // Spot-check the modal probability against its log form.
            let k = mean.floor() as usize - w.start;
            let j = (w.start + k) as f64;
            let log_pmf = if mean == 0.0 { 0.0 } else { -mean + j * mean.ln() - crate::numerics::log_gamma(j + 1.0).unwrap() };
            let tol = 1e-12 * (1.0 + mean.abs() + log_pmf.abs());
            prop_assert!((w.weights[k].ln() - log_pmf).abs() < tol.max(1e-10 * log_pmf.abs()), "{} vs {}", w.weights[k].ln(), log_pmf);
            prop_assert!(w.start as f64 <= mean && (w.start + w.weights.len()) as f64 > mean);
        }

        #[test]
        fn weights_sum_to_one(mean in 0.0f64..500.0, tol_exp in 3i32..14) {
            let tol = 10f64.powi(-tol_exp);
            let w = poisson_weights(mean, tol).unwrap();
            let total: f64 = w.iter().map(|p| p.1).sum();
            prop_assert!(w.iter().all(|p| p.1 >= 0.0));
            prop_assert!((total - 1.0).abs() <= tol + 1e-12, "total {}", total);
        }
    }
}
