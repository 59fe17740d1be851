//! Generalized Bayes shrinkage estimators `δ(x, s) = (1 - E*[λ]) x`.
//!
//! Under the hierarchical prior the posterior mean of `θ` shrinks `x` by the
//! posterior mean of `λ` for the density on `(0, 1)` proportional to
//! `λ^{p/2+a} (1-λ)^b (1 + λw)^{-(p+n)/2-1}`, `w = ‖x‖²/s`. For `w ≥ 1` the
//! substitution `t = (1+w)λ / (1+λw)` is used instead; it keeps the integrand
//! bounded as `w → ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::quadrature::{integrate_unit, QuadratureSpec};
use crate::prior::{HyperParams, Problem};

/// An observation `(x, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub s: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(domain("Observation", format!("s must be positive and finite, got {s}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain("Observation", "x must be finite"));
        }
        Ok(Self { x, s })
    }

    /// `w = ‖x‖² / s`.
    pub fn w(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>() / self.s
    }

    /// `z = w / (1 + w)`.
    pub fn z(&self) -> f64 {
        let w = self.w();
        w / (1.0 + w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    GeneralQuadrature,
    /// Only for `b = n/2 - a - 2`, where `E*[λ] = c / (w + 1 + c)`.
    ClosedForm,
}

const CLOSED_FORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub problem: Problem,
    pub hyper: HyperParams,
    pub mode: Mode,
    pub quadrature: QuadratureSpec,
}

impl EstimatorSpec {
    pub fn new(problem: Problem, hyper: HyperParams, mode: Mode, quadrature: QuadratureSpec) -> Result<Self> {
        let spec = Self {
            problem,
            hyper,
            mode,
            quadrature,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The estimator with `a = ξ(p, n)` and `b = n/2 - a - 2` in closed form.
    pub fn simple_minimax(problem: Problem) -> Result<Self> {
        let a = xi(&problem);
        let hyper = HyperParams::new(a, closed_form_b(&problem, a))?;
        Self::new(problem, hyper, Mode::ClosedForm, QuadratureSpec::default())
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.hyper.validate()?;
        self.quadrature.validate()?;
        if self.mode == Mode::ClosedForm {
            let want = closed_form_b(&self.problem, self.hyper.a);
            if (self.hyper.b - want).abs() > CLOSED_FORM_TOLERANCE {
                return Err(Error::InvalidSpec(format!(
                    "closed form requires b = n/2 - a - 2 = {want}, got b = {}",
                    self.hyper.b
                )));
            }
            if !(self.problem.half_n() - self.hyper.a - 1.0 > 0.0) {
                return Err(Error::InvalidSpec("closed form requires a < n/2 - 1".into()));
            }
        }
        Ok(())
    }

    /// `c = (p/2 + a + 1) / (n/2 - a - 1)`, the limit of `φ(w)` as `w → ∞`
    /// (and the closed-form shrink constant).
    pub fn limit_constant(&self) -> f64 {
        (self.problem.half_p() + self.hyper.a + 1.0) / (self.problem.half_n() - self.hyper.a - 1.0)
    }
}

/// `b = n/2 - a - 2`.
pub fn closed_form_b(problem: &Problem, a: f64) -> f64 {
    problem.half_n() - a - 2.0
}

/// `E*[λ](w)`, the factor by which the estimator shrinks `x`.
pub fn shrink_fraction(w: f64, spec: &EstimatorSpec) -> Result<f64> {
    const NAME: &str = "shrink_fraction";
    if !(w >= 0.0) || !w.is_finite() {
        return Err(domain(NAME, format!("w must be finite and nonnegative, got {w}")));
    }
    spec.validate()?;
    if spec.mode == Mode::ClosedForm {
        let c = spec.limit_constant();
        return Ok(c / (w + 1.0 + c));
    }
    let alpha = spec.problem.half_p() + spec.hyper.a;
    let b = spec.hyper.b;
    let q = &spec.quadrature;
    if w < 1.0 {
        let power = -((spec.problem.p + spec.problem.n) as f64 / 2.0 + 1.0);
        let kernel = |t: f64, _: f64| (power * (t * w).ln_1p()).exp();
        let num = integrate_unit(kernel, alpha + 1.0, b, q)?.require(NAME)?;
        let den = integrate_unit(kernel, alpha, b, q)?.require(NAME)?;
        Ok(num / den)
    } else {
        let zc = 1.0 / (1.0 + w);
        let e = spec.problem.half_n() - spec.hyper.a - b - 1.0;
        let q_of = |t: f64, c: f64| c + zc * t;
        let num = integrate_unit(|t, c| ((e - 1.0) * q_of(t, c).ln()).exp(), alpha + 1.0, b, q)?.require(NAME)?;
        let den = integrate_unit(|t, c| (e * q_of(t, c).ln()).exp(), alpha, b, q)?.require(NAME)?;
        Ok(zc * num / den)
    }
}

/// `φ(w) = w · E*[λ](w)`, so that `δ = (1 - φ(w)/w) x`.
pub fn phi(w: f64, spec: &EstimatorSpec) -> Result<f64> {
    Ok(w * shrink_fraction(w, spec)?)
}

/// Rows `(w, φ(w), E*[λ](w))` over the given grid.
pub fn phi_table(grid: &[f64], spec: &EstimatorSpec) -> Result<Vec<(f64, f64, f64)>> {
    grid.iter()
        .map(|&w| {
            let shrink = shrink_fraction(w, spec)?;
            Ok((w, w * shrink, shrink))
        })
        .collect()
}

/// `δ(x, s) = (1 - E*[λ](w)) x`.
pub fn estimate(obs: &Observation, spec: &EstimatorSpec) -> Result<Vec<f64>> {
    if obs.x.len() != spec.problem.p {
        return Err(Error::DimensionMismatch {
            expected: spec.problem.p,
            got: obs.x.len(),
        });
    }
    let keep = 1.0 - shrink_fraction(obs.w(), spec)?;
    Ok(obs.x.iter().map(|v| keep * v).collect())
}

/// `ξ(p, n) = -2 + (p - 2)(n + 2) / (2(2p + n - 2))`.
pub fn xi(problem: &Problem) -> f64 {
    let p = problem.p as f64;
    let n = problem.n as f64;
    -2.0 + (p - 2.0) * (n + 2.0) / (2.0 * (2.0 * p + n - 2.0))
}

/// `2(p - 2)/(n + 2)`.
pub fn baranchik_bound(problem: &Problem) -> f64 {
    2.0 * (problem.p as f64 - 2.0) / (problem.n as f64 + 2.0)
}

pub const MONOTONE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaranchikFailure {
    Monotonicity { index: usize, previous: f64, value: f64 },
    Bound { index: usize, value: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaranchikOutcome {
    pub passed: bool,
    pub failure: Option<BaranchikFailure>,
}

/// Checks sampled `φ` values for monotonicity and `0 ≤ φ ≤ 2(p-2)/(n+2)`.
pub fn baranchik_check(phi_values: &[f64], problem: &Problem) -> Result<BaranchikOutcome> {
    problem.validate()?;
    if problem.p <= 2 {
        return Err(domain("baranchik_check", format!("requires p >= 3, got p = {}", problem.p)));
    }
    if phi_values.len() < 2 {
        return Err(domain("baranchik_check", "needs at least two samples"));
    }
    let bound = baranchik_bound(problem);
    let slack = MONOTONE_TOLERANCE * bound.max(1.0);
    let mut failure = None;
    for (index, &value) in phi_values.iter().enumerate() {
        if !(value >= -slack && value <= bound + slack) {
            failure = Some(BaranchikFailure::Bound { index, value, bound });
            break;
        }
        if index > 0 {
            let previous = phi_values[index - 1];
            if value < previous - MONOTONE_TOLERANCE * previous.abs().max(1.0) {
                failure = Some(BaranchikFailure::Monotonicity { index, previous, value });
                break;
            }
        }
    }
    Ok(BaranchikOutcome {
        passed: failure.is_none(),
        failure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub id: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub admissible: bool,
    pub minimax: bool,
    pub reasons: Vec<ConditionCheck>,
}

impl RegionVerdict {
    pub fn both(&self) -> bool {
        self.admissible && self.minimax
    }
}

/// Admissibility needs `-1 < a < n/2` and `b > -1/2`; minimaxity through the
/// Baranchik condition needs `b ≥ 0` and `-p/2 - 1 < a ≤ ξ(p, n)`, which is
/// vacuous unless `p ≥ 3`.
pub fn classify(problem: &Problem, hyper: &HyperParams) -> RegionVerdict {
    let (a, b) = (hyper.a, hyper.b);
    let x = xi(problem);
    let check = |id, passed| ConditionCheck { id, passed };
    let reasons = vec![
        check("a_gt_minus_1", a > -1.0),
        check("a_lt_half_n", a < problem.half_n()),
        check("b_gt_minus_half", b > -0.5),
        check("b_nonnegative", b >= 0.0),
        check("a_gt_minus_half_p_minus_1", a > -problem.half_p() - 1.0),
        check("a_le_xi", a <= x),
        check("p_ge_3", problem.p >= 3),
    ];
    let ok = |i: usize| reasons[i].passed;
    RegionVerdict {
        admissible: ok(0) && ok(1) && ok(2),
        minimax: ok(3) && ok(4) && ok(5),
        reasons,
    }
}
