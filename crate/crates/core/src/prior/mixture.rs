//! The normalizer family `ψ(z; j, k)` and the conditional density `f(v | z)`.
//!
//! `f(v | z) = v^{(p+n)/2} / ψ(z) ∫_0^1 t^{p/2+a} (1-t)^b (1-zt)^{-(p/2+a+b+2)}
//! exp(-v / (2(1-zt))) dt`, a continuous mixture over `t` of Gamma laws with
//! shape `(p+n)/2 + 1` and scale `2/(1-zt)`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::{HyperParams, MixtureDensityParams, Problem};
use crate::error::{domain, Result};
use crate::numerics::quadrature::{integrate_segments, integrate_unit, QuadratureSpec};
use crate::numerics::special::{log_beta_unchecked, log_gamma_unchecked};

fn check_psi_args(z: f64, j: f64, k: f64, problem: &Problem, hyper: &HyperParams) -> Result<()> {
    const NAME: &str = "psi_general";
    problem.validate()?;
    hyper.validate()?;
    if !(problem.half_n() - hyper.a > 0.0) {
        return Err(domain(NAME, format!("requires n/2 - a > 0, got n={} a={}", problem.n, hyper.a)));
    }
    if !(j > -1.0) || !j.is_finite() {
        return Err(domain(NAME, format!("requires j > -1, got {j}")));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(domain(NAME, format!("requires k > 0, got {k}")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(domain(NAME, format!("requires z in [0, 1], got {z}")));
    }
    Ok(())
}

struct PsiTerms {
    /// `ln Γ(N_j) + N_j ln(2k)` with `N_j = (p+n)/2 + 1 + (n/2 - a) j`.
    log_gamma_part: f64,
    alpha: f64,
    b: f64,
    /// Exponent of `(1 - zt)` left after the `v` integral.
    exponent: f64,
    /// `(n/2 - a)(j + 1)`, the second Beta argument at `z = 1`.
    tail_shape: f64,
}

impl PsiTerms {
    fn new(j: f64, k: f64, problem: &Problem, hyper: &HyperParams) -> Self {
        let excess = problem.half_n() - hyper.a;
        let shape = (problem.p + problem.n) as f64 / 2.0 + 1.0 + excess * j;
        let tail_shape = excess * (j + 1.0);
        Self {
            log_gamma_part: log_gamma_unchecked(shape) + shape * (2.0 * k).ln(),
            alpha: problem.half_p() + hyper.a,
            b: hyper.b,
            exponent: tail_shape - hyper.b - 1.0,
            tail_shape,
        }
    }

    fn log_endpoints(&self) -> (f64, f64) {
        (
            self.log_gamma_part + log_beta_unchecked(self.alpha + 1.0, self.b + 1.0),
            self.log_gamma_part + log_beta_unchecked(self.alpha + 1.0, self.tail_shape),
        )
    }

    fn log_quadrature(&self, z: f64, spec: &QuadratureSpec) -> Result<f64> {
        let value = if z == 1.0 {
            // (1 - t)^{b} (1 - t)^{exponent}: fold both into the endpoint weight.
            integrate_unit(|_, _| 1.0, self.alpha, self.b + self.exponent, spec)?
        } else {
            let e = self.exponent;
            let zc = 1.0 - z;
            integrate_unit(|t, c| (e * (c + zc * t).ln()).exp(), self.alpha, self.b, spec)?
        };
        Ok(self.log_gamma_part + value.require("psi_general")?.ln())
    }
}

/// `ln ψ(z; j, k)`: Beta closed forms at `z ∈ {0, 1}`, one-dimensional
/// quadrature in between.
pub fn log_psi_general(
    z: f64,
    j: f64,
    k: f64,
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_psi_args(z, j, k, problem, hyper)?;
    spec.validate()?;
    let terms = PsiTerms::new(j, k, problem, hyper);
    let (at0, at1) = terms.log_endpoints();
    if z == 0.0 {
        Ok(at0)
    } else if z == 1.0 {
        Ok(at1)
    } else {
        terms.log_quadrature(z, spec)
    }
}

/// `ψ(z; j, k)`.
pub fn psi_general(
    z: f64,
    j: f64,
    k: f64,
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    log_psi_general(z, j, k, problem, hyper, spec).map(f64::exp)
}

/// `ψ(z; j, k)` by quadrature for every `z`, including the endpoints.
pub fn psi_general_quadrature(
    z: f64,
    j: f64,
    k: f64,
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_psi_args(z, j, k, problem, hyper)?;
    spec.validate()?;
    PsiTerms::new(j, k, problem, hyper).log_quadrature(z, spec).map(f64::exp)
}

/// `(ψ(0; j, k), ψ(1; j, k))` from their Beta closed forms.
pub fn psi_closed_endpoints(j: f64, k: f64, problem: &Problem, hyper: &HyperParams) -> Result<(f64, f64)> {
    check_psi_args(0.0, j, k, problem, hyper)?;
    let (at0, at1) = PsiTerms::new(j, k, problem, hyper).log_endpoints();
    Ok((at0.exp(), at1.exp()))
}

/// `f(· | z)` with its normalizer evaluated once.
#[derive(Debug, Clone, Copy)]
pub struct MixtureDensity {
    params: MixtureDensityParams,
    spec: QuadratureSpec,
    log_psi: f64,
    alpha: f64,
    /// `p/2 + a + b + 2`.
    decay: f64,
    /// `(p + n) / 2`.
    half_pn: f64,
}

impl MixtureDensity {
    pub fn new(params: MixtureDensityParams, spec: &QuadratureSpec) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        let MixtureDensityParams { problem, hyper, z } = params;
        let log_psi = log_psi_general(z, 0.0, 1.0, &problem, &hyper, spec)?;
        let alpha = problem.half_p() + hyper.a;
        Ok(Self {
            params,
            spec: *spec,
            log_psi,
            alpha,
            decay: alpha + hyper.b + 2.0,
            half_pn: (problem.p + problem.n) as f64 / 2.0,
        })
    }

    pub fn params(&self) -> &MixtureDensityParams {
        &self.params
    }

    /// `ln ψ(z)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_psi
    }

    /// `ln f(v | z)` for `v > 0`.
    pub fn log_density(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(domain("f_density", format!("v must be positive and finite, got {v}")));
        }
        let z = self.params.z;
        let zc = 1.0 - z;
        // Largest value of K ln u - v u / 2 over u = 1/(1 - zt) in [1, 1/(1-z)].
        let u_star = (2.0 * self.decay / v).clamp(1.0, 1.0 / zc);
        let shift = self.decay * u_star.ln() - 0.5 * v * u_star;
        let decay = self.decay;
        let inner = integrate_unit(
            |t, c| {
                let q = c + zc * t;
                (-decay * q.ln() - 0.5 * v / q - shift).exp()
            },
            self.alpha,
            self.params.hyper.b,
            &self.spec,
        )?
        .require("f_density")?;
        Ok(self.half_pn * v.ln() - self.log_psi + shift + inner.ln())
    }

    pub fn density(&self, v: f64) -> Result<f64> {
        self.log_density(v).map(f64::exp)
    }

    /// Interior breakpoints in `y = ln v` near the bulk of the mixture: the
    /// modes of the extreme Gamma components.
    pub(crate) fn log_v_landmarks(&self) -> [f64; 2] {
        let shape = self.half_pn + 1.0;
        let lo = (2.0 * shape).ln();
        [lo, lo - (1.0 - self.params.z).ln()]
    }
}

/// `f(v | z)`.
pub fn f_density(v: f64, params: MixtureDensityParams, spec: &QuadratureSpec) -> Result<f64> {
    MixtureDensity::new(params, spec)?.density(v)
}

/// Integration range for [`f_log_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentRegion {
    /// `(0, s)`
    Lower(f64),
    /// `(s, ∞)`
    Upper(f64),
    /// `(0, ∞)`
    Full,
}

pub(crate) fn sorted_breaks(lo: f64, hi: f64, points: &[f64]) -> Vec<f64> {
    let mut inner: Vec<f64> = points.iter().copied().filter(|y| *y > lo && *y < hi).collect();
    inner.sort_by(f64::total_cmp);
    let mut breaks = vec![lo];
    for y in inner {
        if y - breaks[breaks.len() - 1] > 1e-9 * (1.0 + y.abs()) {
            breaks.push(y);
        }
    }
    if hi - breaks[breaks.len() - 1] <= 1e-9 * (1.0 + hi.abs()) && breaks.len() > 1 {
        breaks.pop();
    }
    breaks.push(hi);
    breaks
}

/// `∫ |ln v|^kpow f(v | z) dv` over the chosen region, with the outer
/// integral taken in `ln v`.
pub fn f_log_moment(
    params: MixtureDensityParams,
    kpow: u32,
    region: MomentRegion,
    spec: &QuadratureSpec,
) -> Result<f64> {
    const NAME: &str = "f_log_moment";
    let density = MixtureDensity::new(params, spec)?;
    let (lo, hi) = match region {
        MomentRegion::Lower(s) | MomentRegion::Upper(s) if !(s > 0.0) || !s.is_finite() => {
            return Err(domain(NAME, format!("region boundary must be positive, got {s}")));
        }
        MomentRegion::Lower(s) => (f64::NEG_INFINITY, s.ln()),
        MomentRegion::Upper(s) => (s.ln(), f64::INFINITY),
        MomentRegion::Full => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let [m0, m1] = density.log_v_landmarks();
    let breaks = sorted_breaks(lo, hi, &[m0, m1, 0.0]);
    let failure = RefCell::new(None);
    let integrand = |y: f64| match density.log_density(y.exp()) {
        _ if y.exp() == 0.0 || y.exp().is_infinite() => 0.0,
        Ok(lf) => {
            let weight = if kpow == 0 { 1.0 } else { y.abs().powi(kpow as i32) };
            weight * (lf + y).exp()
        }
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let result = integrate_segments(integrand, &breaks, 1.0, spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result.require(NAME)
}

/// Constants of the `f(v | z)` moment bounds, computed from their explicit
/// formulas.
#[derive(Debug, Clone, Copy)]
pub struct MixtureConstants {
    problem: Problem,
    hyper: HyperParams,
}

impl MixtureConstants {
    pub fn new(problem: Problem, hyper: HyperParams) -> Result<Self> {
        check_psi_args(0.0, 0.0, 1.0, &problem, &hyper)?;
        Ok(Self { problem, hyper })
    }

    fn excess(&self) -> f64 {
        self.problem.half_n() - self.hyper.a
    }

    /// `ε* = ¼ min((n/2 - a)/(b + 1), 2)`.
    pub fn eps_star(&self) -> f64 {
        0.25 * (self.excess() / (self.hyper.b + 1.0)).min(2.0)
    }

    pub fn t1(&self, j: f64, k: f64) -> Result<f64> {
        let (at0, at1) = psi_closed_endpoints(j, k, &self.problem, &self.hyper)?;
        Ok(at0.min(at1))
    }

    pub fn t2(&self, j: f64, k: f64) -> Result<f64> {
        let (at0, at1) = psi_closed_endpoints(j, k, &self.problem, &self.hyper)?;
        Ok(at0.max(at1))
    }

    /// Coefficient of the small-`v` envelope `f(v|z) ≤ T3(ε) v^{n/2-a-1-ε(b+1)}`.
    pub fn t3(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(domain("t3", format!("epsilon must lie in (0, 1), got {eps}")));
        }
        let alpha = self.problem.half_p() + self.hyper.a;
        let lift = eps * (self.hyper.b + 1.0);
        let base = self.problem.p as f64 + 2.0 * self.hyper.a + 2.0 + 2.0 * lift;
        let log_num = (alpha + 1.0 + lift) * base.ln() + log_beta_unchecked(alpha + 1.0, lift);
        Ok((log_num - self.t1(0.0, 1.0)?.ln()).exp())
    }

    /// Polynomial rate of the lower-tail bound.
    pub fn c1(&self, k: u32) -> f64 {
        let base = self.excess() - self.eps_star() * (self.hyper.b + 1.0);
        if k == 0 {
            base
        } else {
            base - 0.25 * self.excess()
        }
    }

    pub fn c2(&self, k: u32) -> Result<f64> {
        let lead = self.t3(self.eps_star())? / self.c1(k);
        if k == 0 {
            Ok(lead)
        } else {
            let kf = k as f64;
            Ok(lead * (4.0 * kf / self.excess()).powf(kf))
        }
    }

    pub fn c3(&self, k: u32) -> Result<f64> {
        let t1 = self.t1(0.0, 1.0)?;
        if k == 0 {
            Ok(self.t2(0.0, 2.0)? / t1)
        } else {
            let kf = k as f64;
            let sum = self.t2(-0.5, 2.0)? + self.t2(0.5, 2.0)?;
            Ok((2.0 * kf / self.excess()).powf(kf) * sum / t1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::integrate_positive_axis;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn params(p: usize, n: usize, a: f64, b: f64, z: f64) -> MixtureDensityParams {
        MixtureDensityParams::new(Problem::new(p, n).unwrap(), HyperParams::new(a, b).unwrap(), z).unwrap()
    }

    #[test]
    fn psi_endpoint_values() {
        let problem = Problem::new(4, 4).unwrap();
        let hyper = HyperParams::new(0.0, 0.0).unwrap();
        let at0 = psi_general(0.0, 0.0, 1.0, &problem, &hyper, &spec()).unwrap();
        let at1 = psi_general(1.0, 0.0, 1.0, &problem, &hyper, &spec()).unwrap();
        assert!((at0 - 256.0).abs() < 1e-10 * 256.0);
        assert!((at1 - 64.0).abs() < 1e-10 * 64.0);
        let q0 = psi_general_quadrature(0.0, 0.0, 1.0, &problem, &hyper, &spec()).unwrap();
        let q1 = psi_general_quadrature(1.0, 0.0, 1.0, &problem, &hyper, &spec()).unwrap();
        assert!((q0 - 256.0).abs() < 1e-10 * 256.0);
        assert!((q1 - 64.0).abs() < 1e-10 * 64.0);
        let mid = psi_general(0.5, 0.0, 1.0, &problem, &hyper, &spec()).unwrap();
        assert!(mid < at0 && mid > at1);
    }

    #[test]
    fn psi_rejects_bad_arguments() {
        let problem = Problem::new(4, 4).unwrap();
        let hyper = HyperParams::new(0.0, 0.0).unwrap();
        assert!(psi_general(0.5, -1.0, 1.0, &problem, &hyper, &spec()).is_err());
        assert!(psi_general(0.5, 0.0, 0.0, &problem, &hyper, &spec()).is_err());
        assert!(psi_general(1.5, 0.0, 1.0, &problem, &hyper, &spec()).is_err());
        let heavy = HyperParams::new(2.0, 0.0).unwrap();
        assert!(psi_general(0.5, 0.0, 1.0, &problem, &heavy, &spec()).is_err());
    }

    #[test]
    fn psi_matches_raw_double_integral() {
        // Direct v-then-t evaluation of the defining double integral.
        let problem = Problem::new(5, 6).unwrap();
        let hyper = HyperParams::new(-0.3, 0.4).unwrap();
        let (j, k, z) = (0.5, 2.0, 0.6);
        let alpha = problem.half_p() + hyper.a;
        let decay = alpha + hyper.b + 2.0;
        let power = (problem.p + problem.n) as f64 / 2.0 + (problem.half_n() - hyper.a) * j;
        let inner = |q: f64| {
            integrate_positive_axis(|v| (power * v.ln() - v / (2.0 * k * q)).exp(), &spec())
                .unwrap()
                .value
        };
        let raw = integrate_unit(
            |t, c| {
                let q = c + (1.0 - z) * t;
                q.powf(-decay) * inner(q)
            },
            alpha,
            hyper.b,
            &spec(),
        )
        .unwrap()
        .value;
        let closed = psi_general(z, j, k, &problem, &hyper, &spec()).unwrap();
        assert!((raw - closed).abs() < 1e-8 * closed, "{raw} vs {closed}");
    }

    #[test]
    fn density_normalizes() {
        for z in [0.0, 0.5, 0.99] {
            let d = MixtureDensity::new(params(4, 6, 0.5, -0.3, z), &spec()).unwrap();
            let total = f_log_moment(*d.params(), 0, MomentRegion::Full, &spec()).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "z={z}: {total}");
        }
    }

    #[test]
    fn zero_z_is_a_gamma_density() {
        let pr = params(6, 8, 0.0, 1.0, 0.0);
        let d = MixtureDensity::new(pr, &spec()).unwrap();
        let shape = 8.0;
        for v in [0.1, 1.0, 7.0, 16.0, 40.0] {
            let gamma = ((shape - 1.0) * f64::ln(v) - v / 2.0 - log_gamma_unchecked(shape) - shape * 2f64.ln()).exp();
            let f = d.density(v).unwrap();
            assert!((f - gamma).abs() <= 1e-10 * gamma, "v={v}: {f} vs {gamma}");
        }
    }

    #[test]
    fn regions_partition_the_mass() {
        let pr = params(5, 5, -0.5, 0.0, 0.3);
        let lower = f_log_moment(pr, 1, MomentRegion::Lower(3.0), &spec()).unwrap();
        let upper = f_log_moment(pr, 1, MomentRegion::Upper(3.0), &spec()).unwrap();
        let full = f_log_moment(pr, 1, MomentRegion::Full, &spec()).unwrap();
        assert!((lower + upper - full).abs() < 1e-8 * full);
    }

    #[test]
    fn small_v_envelope_holds() {
        let pr = params(5, 6, 0.2, 0.5, 0.9);
        let d = MixtureDensity::new(pr, &spec()).unwrap();
        let constants = MixtureConstants::new(pr.problem, pr.hyper).unwrap();
        for eps in [0.1, 0.5, 0.9] {
            let t3 = constants.t3(eps).unwrap();
            let power = pr.problem.half_n() - pr.hyper.a - 1.0 - eps * (pr.hyper.b + 1.0);
            for v in [1e-6, 1e-3, 0.1, 0.5, 0.99] {
                assert!(d.density(v).unwrap() <= t3 * f64::powf(v, power));
            }
        }
    }

    #[test]
    fn constants_are_positive() {
        let c = MixtureConstants::new(Problem::new(10, 10).unwrap(), HyperParams::new(-0.5, 0.0).unwrap()).unwrap();
        let eps = c.eps_star();
        assert!(eps > 0.0 && eps < 1.0);
        for k in 0..4 {
            assert!(c.c1(k) > 0.0);
            assert!(c.c2(k).unwrap() > 0.0);
            assert!(c.c3(k).unwrap() > 0.0);
        }
    }
}
