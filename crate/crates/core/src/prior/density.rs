//! The mixture density `π(r | a, b)` in `r = ‖θ‖²` and its derivative.
//!
//! With `ξ = (1 - λ) / λ` the mixture becomes
//! `∫_0^∞ ξ^{b - m} (1 + ξ)^{-(a+b+2)} e^{-r / (2ξ)} dξ` with `m = p/2`
//! (or `p/2 + 1` for the derivative). It is integrated in `y = ln ξ`, where
//! the log-integrand is concave; the mode and the curvature there set the
//! breakpoints and tail scale. This form has no endpoint singularity for any
//! `r ≥ 0`, unlike the `λ` form whose `(1-λ)^{b-p/2}` factor is not
//! integrable at `λ = 1` when `r` is small and `b ≤ p/2 - 1`.

use std::f64::consts::PI;

use super::{HyperParams, Problem};
use crate::error::{domain, Error, Result};
use crate::numerics::quadrature::{integrate_segments, integrate_unit, QuadratureSpec};
use crate::numerics::special::{log_beta_unchecked, log_gamma_unchecked, softplus};

fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// `g(y) = c1·y − c2·softplus(y) − h·e^{−y}`.
#[derive(Clone, Copy)]
struct LogXiIntegrand {
    c1: f64,
    c2: f64,
    half_r: f64,
}

impl LogXiIntegrand {
    fn new(m: f64, hyper: &HyperParams, r: f64) -> Self {
        Self {
            c1: hyper.b - m + 1.0,
            c2: hyper.a + hyper.b + 2.0,
            half_r: 0.5 * r,
        }
    }

    /// `h·e^{−y}`, formed in logs since `e^{−y}` alone can overflow near the mode.
    fn decay(&self, y: f64) -> f64 {
        if self.half_r == 0.0 {
            0.0
        } else {
            (self.half_r.ln() - y).exp()
        }
    }

    fn value(&self, y: f64) -> f64 {
        self.c1 * y - self.c2 * softplus(y) - self.decay(y)
    }

    fn slope(&self, y: f64) -> f64 {
        self.c1 - self.c2 * sigmoid(y) + self.decay(y)
    }

    fn curvature(&self, y: f64) -> f64 {
        let s = sigmoid(y);
        -self.c2 * s * (1.0 - s) - self.decay(y)
    }

    fn mode(&self) -> f64 {
        let mut lo = -1.0f64;
        while self.slope(lo) <= 0.0 {
            lo = 2.0 * lo - 1.0;
        }
        let mut hi = 1.0f64;
        while self.slope(hi) >= 0.0 {
            hi = 2.0 * hi + 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `ln ∫ exp(g(y)) dy`.
    fn log_integral(&self, function: &'static str, spec: &QuadratureSpec) -> Result<f64> {
        let mode = self.mode();
        let peak = self.value(mode);
        // When c1 = 0 the integrand is nearly flat between ln(r/2) and 0 and
        // the curvature at the mode is tiny; the tails never decay slower
        // than the rates below, so they bound the scale.
        let right_rate = self.c2 - self.c1;
        let left_rate = if self.half_r == 0.0 && self.c1 > 0.0 { self.c1 } else { 1.0 };
        let tail = (1.0 / right_rate).max(1.0 / left_rate).max(1.0);
        let width = (1.0 / (-self.curvature(mode)).sqrt()).min(tail);
        let mut interior = vec![mode, 0.0];
        if self.half_r > 0.0 {
            interior.push(self.half_r.ln());
        }
        interior.sort_by(f64::total_cmp);
        let mut breaks = vec![f64::NEG_INFINITY];
        for y in interior {
            if y - breaks[breaks.len() - 1] > 1e-6 * width {
                breaks.push(y);
            }
        }
        breaks.push(f64::INFINITY);
        let result = integrate_segments(|y| (self.value(y) - peak).exp(), &breaks, width, spec)?;
        let scaled = result.require(function)?;
        Ok(peak + scaled.ln())
    }
}

fn log_prefactor(problem: &Problem, hyper: &HyperParams) -> f64 {
    -problem.half_p() * (2.0 * PI).ln() - log_beta_unchecked(hyper.a + 1.0, hyper.b + 1.0)
}

fn check_inputs(problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<()> {
    problem.validate()?;
    hyper.validate()?;
    spec.validate()
}

/// `ln π(r | a, b)`.
pub fn prior_log_density_r(r: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    const NAME: &str = "prior_density_r";
    check_inputs(problem, hyper, spec)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(NAME, format!("r must be finite and nonnegative, got {r}")));
    }
    if r == 0.0 && hyper.b <= problem.half_p() - 1.0 {
        return Err(Error::Divergence {
            function: NAME,
            reason: format!("density is infinite at r = 0 when b <= p/2 - 1 (b={}, p={})", hyper.b, problem.p),
        });
    }
    let integrand = LogXiIntegrand::new(problem.half_p(), hyper, r);
    Ok(log_prefactor(problem, hyper) + integrand.log_integral(NAME, spec)?)
}

/// `π(r | a, b)`; strictly positive and strictly decreasing in `r`.
pub fn prior_density_r(r: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    prior_log_density_r(r, problem, hyper, spec).map(f64::exp)
}

/// `π(r | a, b)` from the original `λ` integral; an independent route used
/// for cross-checks. Requires `r > 0` or `b > p/2 - 1`.
pub fn prior_density_r_lambda_form(
    r: f64,
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    const NAME: &str = "prior_density_r_lambda_form";
    check_inputs(problem, hyper, spec)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(NAME, format!("r must be finite and nonnegative, got {r}")));
    }
    let half_p = problem.half_p();
    let alpha = half_p + hyper.a;
    let value = if r == 0.0 {
        if hyper.b <= half_p - 1.0 {
            return Err(Error::Divergence {
                function: NAME,
                reason: "density is infinite at r = 0 when b <= p/2 - 1".into(),
            });
        }
        integrate_unit(|_, _| 1.0, alpha, hyper.b - half_p, spec)?
    } else {
        integrate_unit(
            |t, c| {
                if c == 0.0 {
                    0.0
                } else {
                    (-half_p * c.ln() - t * r / (2.0 * c)).exp()
                }
            },
            alpha,
            hyper.b,
            spec,
        )?
    };
    Ok(log_prefactor(problem, hyper).exp() * value.require(NAME)?)
}

/// `π′(r | a, b)`, always negative.
pub fn prior_density_deriv(r: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    const NAME: &str = "prior_density_deriv";
    check_inputs(problem, hyper, spec)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(NAME, format!("r must be positive, got {r}")));
    }
    let integrand = LogXiIntegrand::new(problem.half_p() + 1.0, hyper, r);
    let log_abs = log_prefactor(problem, hyper) + integrand.log_integral(NAME, spec)?;
    Ok(-0.5 * log_abs.exp())
}

/// `r π′(r) / π(r)`, evaluated as a ratio of log-integrals so it stays
/// accurate where `π` itself under- or overflows.
pub fn log_slope(r: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    const NAME: &str = "log_slope";
    check_inputs(problem, hyper, spec)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(NAME, format!("r must be positive, got {r}")));
    }
    let base = LogXiIntegrand::new(problem.half_p(), hyper, r).log_integral(NAME, spec)?;
    let raised = LogXiIntegrand::new(problem.half_p() + 1.0, hyper, r).log_integral(NAME, spec)?;
    Ok(-0.5 * r * (raised - base).exp())
}

/// `∫_{R^p} π(‖μ‖² | a, b) dμ`, which is 1 for every valid `(a, b)`.
pub fn theta_mass(problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    const NAME: &str = "theta_mass";
    check_inputs(problem, hyper, spec)?;
    let half_p = problem.half_p();
    // Polar coordinates, then x = ln r.
    let log_area = half_p * PI.ln() - log_gamma_unchecked(half_p);
    let failure = std::cell::RefCell::new(None);
    let integrand = |x: f64| match prior_log_density_r(x.exp(), problem, hyper, spec) {
        // e^x out of range: the integrand is negligible there.
        _ if x.exp() == 0.0 || x.exp().is_infinite() => 0.0,
        Ok(lp) => (lp + half_p * x + log_area).exp(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let left_rate = (hyper.b + 1.0).min(half_p);
    let right_rate = hyper.a + 1.0;
    let scale = 1.0 / left_rate.min(right_rate).min(1.0);
    let result = integrate_segments(integrand, &[f64::NEG_INFINITY, 0.0, f64::INFINITY], scale, spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result.require(NAME)
}
