//! The tapering factors `h_i(η) = i / (i + |ln η|)` and `H_i = h_i / i`.

use crate::error::{domain, Result};

fn check(eta: f64, i: u32) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(domain("h_blyth", format!("eta must be positive and finite, got {eta}")));
    }
    if i == 0 {
        return Err(domain("h_blyth", "index must be at least 1"));
    }
    Ok(())
}

#[inline]
pub(crate) fn big_h_log(log_eta: f64, i: f64) -> f64 {
    1.0 / (i + log_eta.abs())
}

/// `h_i(η)`, in `(0, 1]` and equal to 1 only at `η = 1`.
pub fn h_blyth(eta: f64, i: u32) -> Result<f64> {
    check(eta, i)?;
    let i = i as f64;
    Ok(i * big_h_log(eta.ln(), i))
}

/// `H_i(η) = h_i(η) / i = 1 / (i + |ln η|)`.
pub fn h_blyth_scaled(eta: f64, i: u32) -> Result<f64> {
    check(eta, i)?;
    Ok(big_h_log(eta.ln(), i as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(h_blyth(1.0, 1).unwrap(), 1.0);
        assert!((h_blyth(2f64.exp(), 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((h_blyth_scaled(2f64.exp(), 2).unwrap() - 0.25).abs() < 1e-15);
        assert!(h_blyth(0.0, 1).is_err());
        assert!(h_blyth(1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn bounded_symmetric_and_increasing(log_eta in -30.0f64..30.0, i in 1u32..1000) {
            let eta = log_eta.exp();
            let h = h_blyth(eta, i).unwrap();
            prop_assert!(h > 0.0 && h <= 1.0);
            let mirrored = h_blyth(1.0 / eta, i).unwrap();
            prop_assert!((h - mirrored).abs() <= 1e-12 * h);
            prop_assert!(h_blyth(eta, i + 1).unwrap() >= h);
        }
    }
}
