//! `A(x, s) = m(π(θ, η) k(η‖θ‖²) / (η‖θ‖²))` with
//! `k(r) = r^{1/2} 1{r ≤ 1} + 1{r > 1}`.
//!
//! Given `(λ, η)` the posterior of `θ` is normal, and `η‖θ‖²/(1-λ)` is
//! noncentral chi-square with `p` degrees of freedom and noncentrality
//! `(1-λ)η‖x‖²`. Writing it as a Poisson mixture of central chi-squares
//! gives closed forms for each term through the incomplete gamma function,
//! leaving a `(λ, η)` double integral.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{coarse_subgrid, BoundCheckReport, DetailRecord, CAP_FACTOR};
use crate::error::{domain, Error, Result};
use crate::numerics::poisson_window;
use crate::numerics::quadrature::{integrate_segments, integrate_unit, QuadratureSpec};
use crate::numerics::special::{log_beta_unchecked, log_gamma_unchecked, regularized_gamma};
use crate::prior::{sorted_breaks, HyperParams, Problem};

/// Tail mass allowed to be dropped from each Poisson mixture.
pub const A_POISSON_TAIL: f64 = 1e-12;
/// Poisson means above this are refused rather than summed term by term.
const MAX_POISSON_MEAN: f64 = 1e8;
/// `η` nodes whose Gamma factor is this far below its peak are skipped.
const NEGLIGIBLE_GAMMA: f64 = 1e-40;

/// `k(r)/r`: `r^{-1/2}` on `(0, 1]`, `1/r` above.
pub fn k_over_r(r: f64) -> f64 {
    if r <= 1.0 {
        r.powf(-0.5)
    } else {
        1.0 / r
    }
}

/// `c^{1/2} E[k(cY)/(cY)]` for `Y ~ χ²_ν`, `ν > 2`, one `ν` at a time; the
/// reference for [`scaled_chi_moments`].
#[cfg(test)]
fn scaled_chi_moment(nu: f64, c: f64) -> f64 {
    let x0 = 0.5 / c;
    let (lower, _) = regularized_gamma(0.5 * nu - 0.5, x0);
    let (_, upper) = regularized_gamma(0.5 * nu - 1.0, x0);
    let ratio = (log_gamma_unchecked(0.5 * nu - 0.5) - log_gamma_unchecked(0.5 * nu)).exp();
    let tail = if upper == 0.0 { 0.0 } else { upper / (c.sqrt() * (nu - 2.0)) };
    FRAC_1_SQRT_2 * ratio * lower + tail
}

/// `ln(x^a e^{-x} / Γ(a+1))`.
fn log_gamma_term(a: f64, x: f64) -> f64 {
    a * x.ln() - x - log_gamma_unchecked(a + 1.0)
}

/// `x^a e^{-x} / Γ(a+1)`.
fn gamma_term(a: f64, x: f64) -> f64 {
    log_gamma_term(a, x).exp()
}

/// Above this a log gamma term is converted back with [`gamma_term`].
const LOG_REPRESENTABLE: f64 = -700.0;

/// The terms `x^a e^{-x}/Γ(a+1)` along a unit-step sequence of `a`. An
/// underflowed term is followed in logs only while the sequence still rises
/// toward its mode; on the falling side it stays zero.
struct TermWalk {
    x: f64,
    term: f64,
    /// `ln term` while `term` has underflowed and may still recover.
    log_term: Option<f64>,
}

impl TermWalk {
    fn new(a: f64, x: f64) -> Self {
        Self {
            x,
            term: gamma_term(a, x),
            log_term: None,
        }
    }

    /// The term at `a`, given that the walk is currently positioned there.
    /// `rising` says whether the next step moves toward the mode.
    fn at(&mut self, a: f64, rising: bool) -> f64 {
        if self.term == 0.0 && rising {
            let lt = *self.log_term.get_or_insert_with(|| log_gamma_term(a, self.x));
            if lt > LOG_REPRESENTABLE {
                self.term = gamma_term(a, self.x);
                self.log_term = None;
            }
        }
        self.term
    }

    /// Moves one step; `ratio` is the next term over the current one.
    fn step(&mut self, ratio: f64) {
        if self.term != 0.0 {
            self.term *= ratio;
        } else if let Some(lt) = self.log_term.as_mut() {
            *lt += ratio.ln();
        }
    }
}

/// [`scaled_chi_moment`] at `ν = p + 2j` for `j = j0..j0 + len`, written to
/// `out`. Incomplete gamma values are evaluated once at each end and carried
/// through the block with `P(a, x) = P(a+1, x) + x^a e^{-x}/Γ(a+1)` downward
/// and `Q(a+1, x) = Q(a, x) + x^a e^{-x}/Γ(a+1)` upward, the directions in
/// which both recurrences only add positive terms.
fn scaled_chi_moments(p: f64, c: f64, j0: usize, len: usize, out: &mut Vec<f64>) {
    out.clear();
    if len == 0 {
        return;
    }
    out.resize(len, 0.0);
    let x0 = 0.5 / c;
    // Lower parts first, top down: a_j = p/2 + j - 1/2.
    let a_top = 0.5 * p + (j0 + len - 1) as f64 - 0.5;
    let mut pv = regularized_gamma(a_top, x0).0;
    out[len - 1] = pv;
    let mut walk = TermWalk::new(a_top - 1.0, x0);
    for k in (0..len - 1).rev() {
        let a = a_top - (len - 1 - k) as f64;
        pv += walk.at(a, a > x0);
        out[k] = pv;
        walk.step(a / x0);
    }
    // Then bottom up with b_j = p/2 + j - 1 and ratio Γ(ν/2 - 1/2)/Γ(ν/2).
    let b0 = 0.5 * p + j0 as f64 - 1.0;
    let mut qv = regularized_gamma(b0, x0).1;
    let mut walk = TermWalk::new(b0, x0);
    let inv_sqrt_c = 1.0 / c.sqrt();
    let mut ratio = (log_gamma_unchecked(b0 + 0.5) - log_gamma_unchecked(b0 + 1.0)).exp();
    for (k, slot) in out.iter_mut().enumerate() {
        let b = b0 + k as f64;
        let tail = if qv == 0.0 { 0.0 } else { qv * inv_sqrt_c / (2.0 * b) };
        *slot = FRAC_1_SQRT_2 * ratio * *slot + tail;
        qv += walk.at(b, b + 1.0 < x0);
        walk.step(x0 / (b + 1.0));
        ratio *= (b + 0.5) / (b + 1.0);
    }
}

/// [`scaled_chi_moments`] for one `c`, kept over a contiguous index range
/// that grows as the Poisson windows of successive `η` nodes move.
#[derive(Default)]
struct MomentCache {
    start: usize,
    values: Vec<f64>,
    scratch: Vec<f64>,
}

impl MomentCache {
    fn get(&mut self, p: f64, c: f64, start: usize, len: usize) -> &[f64] {
        let end = start + len;
        if self.values.is_empty() {
            scaled_chi_moments(p, c, start, len, &mut self.values);
            self.start = start;
        } else {
            if start < self.start {
                // Grow geometrically so repeated small steps left stay linear overall.
                let from = start.min(self.start.saturating_sub(self.values.len()));
                scaled_chi_moments(p, c, from, self.start - from, &mut self.scratch);
                self.scratch.extend_from_slice(&self.values);
                std::mem::swap(&mut self.values, &mut self.scratch);
                self.start = from;
            }
            let have = self.start + self.values.len();
            if end > have {
                scaled_chi_moments(p, c, have, end - have, &mut self.scratch);
                self.values.extend_from_slice(&self.scratch);
            }
        }
        &self.values[start - self.start..end - self.start]
    }
}

fn check_inputs(x_norm: f64, s: f64, problem: &Problem, hyper: &HyperParams) -> Result<()> {
    const NAME: &str = "a_value";
    problem.validate()?;
    hyper.validate()?;
    if problem.p < 3 {
        return Err(domain(NAME, "requires p >= 3 (E[1/χ²_p] is infinite otherwise)"));
    }
    if !(hyper.b > -0.5) {
        return Err(domain(NAME, format!("requires b > -1/2, got {}", hyper.b)));
    }
    if !(x_norm >= 0.0) || !x_norm.is_finite() {
        return Err(domain(NAME, format!("‖x‖ must be finite and nonnegative, got {x_norm}")));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(NAME, format!("s must be positive, got {s}")));
    }
    Ok(())
}

/// `ln A(x, s)`; depends on `x` only through `‖x‖`.
pub fn a_log_value(x_norm: f64, s: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    check_inputs(x_norm, s, problem, hyper)?;
    spec.validate()?;
    // Everything below is positive, so a relative target alone is meaningful.
    let spec = spec.with_absolute_tolerance(f64::MIN_POSITIVE);
    let p = problem.p as f64;
    let half_n = problem.half_n();
    let xx = x_norm * x_norm;
    let big_n = 0.5 * (p + problem.n as f64);
    let log_const = (half_n - 1.0) * s.ln()
        - log_gamma_unchecked(half_n)
        - half_n * std::f64::consts::LN_2
        - 0.5 * p * (2.0 * PI).ln()
        - log_beta_unchecked(hyper.a + 1.0, hyper.b + 1.0);
    // η-integral scale at β = λ‖x‖² + s is `N ln(2N/β) - N`; shift by its largest value.
    let shift_at = |beta: f64| big_n * (2.0 * big_n / beta).ln() - big_n;
    let reference = shift_at(s);

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let record = |e: Error| {
        failure.borrow_mut().get_or_insert(e);
    };
    let lambda_integrand = |lambda: f64, c: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let beta = lambda * xx + s;
        let log_eta0 = (2.0 * big_n / beta).ln();
        let shift = big_n * log_eta0 - big_n;
        let moments = RefCell::new(MomentCache::default());
        let eta_integrand = |y: f64| -> f64 {
            let eta = y.exp();
            if eta == 0.0 || eta.is_infinite() {
                return 0.0;
            }
            let gamma_part = (big_n * y - 0.5 * eta * beta - shift).exp();
            if gamma_part < NEGLIGIBLE_GAMMA {
                return 0.0;
            }
            let mean = 0.5 * c * eta * xx;
            if mean > MAX_POISSON_MEAN {
                record(Error::Truncation {
                    function: "a_value",
                    tail_bound: mean,
                    tolerance: MAX_POISSON_MEAN,
                });
                return 0.0;
            }
            match poisson_window(mean, A_POISSON_TAIL) {
                Ok(window) => {
                    let mut moments = moments.borrow_mut();
                    let block = moments.get(p, c, window.start, window.weights.len());
                    let sum: f64 = window.weights.iter().zip(block).map(|(w, g)| w * g).sum();
                    gamma_part * sum
                }
                Err(e) => {
                    record(e);
                    0.0
                }
            }
        };
        let outer_mode = (2.0 * big_n / (xx + s)).ln();
        let breaks = sorted_breaks(f64::NEG_INFINITY, f64::INFINITY, &[outer_mode, log_eta0]);
        match integrate_segments(eta_integrand, &breaks, 1.0, &spec).and_then(|r| r.require("a_value")) {
            Ok(v) => (shift - reference).exp() * v,
            Err(e) => {
                record(e);
                0.0
            }
        }
    };
    let outer = integrate_unit(lambda_integrand, hyper.a + 0.5 * p, hyper.b - 0.5, &spec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let value = outer?.require("a_value")?;
    Ok(log_const + reference + value.ln())
}

/// `A(x, s)` at `‖x‖ = x_norm`.
pub fn a_value(x_norm: f64, s: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    a_log_value(x_norm, s, problem, hyper, spec).map(f64::exp)
}

fn normalize(log_a: f64, x_norm: f64, s: f64, problem: &Problem) -> f64 {
    let half_p = problem.half_p();
    (log_a + (half_p + 1.0) * s.ln() + (half_p + 0.5) * (x_norm * x_norm / s).ln_1p()).exp()
}

/// `A(x, s) s^{p/2+1} (1 + ‖x‖²/s)^{p/2+1/2}`, which stays bounded when `b > -1/2`.
pub fn normalized_a(x_norm: f64, s: f64, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    Ok(normalize(a_log_value(x_norm, s, problem, hyper, spec)?, x_norm, s, problem))
}

/// Supremum of [`normalized_a`] over the product grid. The cap is
/// [`CAP_FACTOR`] times the supremum over the coarse subgrid (every fourth
/// point of each axis plus the last), so a statistic that keeps growing as
/// the grid extends fails.
pub fn a_bound_check(
    x_norm_grid: &[f64],
    s_grid: &[f64],
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<BoundCheckReport> {
    if x_norm_grid.is_empty() || s_grid.is_empty() {
        return Err(domain("a_bound_check", "grids must be nonempty"));
    }
    let coarse_x: Vec<usize> = coarse_subgrid(&(0..x_norm_grid.len()).collect::<Vec<_>>());
    let coarse_s: Vec<usize> = coarse_subgrid(&(0..s_grid.len()).collect::<Vec<_>>());
    let mut details = Vec::new();
    let mut sup = f64::NEG_INFINITY;
    let mut coarse_sup = f64::NEG_INFINITY;
    let mut positive = true;
    for (ix, &x) in x_norm_grid.iter().enumerate() {
        for (is, &s) in s_grid.iter().enumerate() {
            let log_a = a_log_value(x, s, problem, hyper, spec)?;
            let a = log_a.exp();
            let stat = normalize(log_a, x, s, problem);
            positive &= a > 0.0 && a.is_finite();
            sup = sup.max(stat);
            if coarse_x.contains(&ix) && coarse_s.contains(&is) {
                coarse_sup = coarse_sup.max(stat);
            }
            details.push(DetailRecord::new(
                "point",
                &[("x_norm", x), ("s", s), ("a", a), ("log_a", log_a), ("statistic", stat)],
            ));
        }
    }
    let cap = CAP_FACTOR * coarse_sup;
    let mut summary = BTreeMap::new();
    summary.insert("coarse_sup".to_string(), coarse_sup);
    Ok(BoundCheckReport {
        quantity: "a_bound".into(),
        grid: format!("‖x‖ in {x_norm_grid:?}; s in {s_grid:?}"),
        sup_statistic: sup,
        cap,
        passed: positive && sup.is_finite() && sup <= cap,
        summary,
        details,
        note: (!positive).then(|| "A(x, s) was not positive and finite at some point".to_string()),
    })
}
