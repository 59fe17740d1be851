//! Reference computations for tests. These use fixed-step double-exponential
//! rules and closed forms, and share no code with the library's adaptive
//! quadrature or special functions.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// Tanh-sinh nodes `(x, 1 - x, weight)` on `(0, 1)`.
pub fn tanh_sinh(h: f64, t_max: f64) -> Vec<(f64, f64, f64)> {
    let n = (t_max / h).round() as i64;
    (-n..=n)
        .filter_map(|k| {
            let t = k as f64 * h;
            let u = FRAC_PI_2 * t.sinh();
            let x = 1.0 / (1.0 + (-2.0 * u).exp());
            let xc = 1.0 / (1.0 + (2.0 * u).exp());
            let w = h * FRAC_PI_2 * t.cosh() * 2.0 * x * xc;
            (x > 0.0 && xc > 0.0 && w > 0.0).then_some((x, xc, w))
        })
        .collect()
}

/// Exp-sinh nodes `(ln y, ln weight)` on `(0, ∞)` for `y = center·exp(π/2 sinh t)`.
pub fn exp_sinh_log(center: f64, h: f64, t_max: f64) -> Vec<(f64, f64)> {
    let n = (t_max / h).round() as i64;
    (-n..=n)
        .map(|k| {
            let t = k as f64 * h;
            let ly = center.ln() + FRAC_PI_2 * t.sinh();
            (ly, h.ln() + ly + (FRAC_PI_2 * t.cosh()).ln())
        })
        .collect()
}

pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    libm::lgamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Sum of `exp(l_k) · v_k` without overflow, returned as `(ln scale, sum / scale)`.
fn scaled_sum(terms: &[(f64, f64)]) -> (f64, f64) {
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    (top, terms.iter().map(|&(l, v)| (l - top).exp() * v).sum())
}

/// `E[ηλ]/E[η]` under the posterior density on `(λ, η)` proportional to
/// `η^{(p+n)/2-1} λ^{p/2+a} (1-λ)^b exp(-η(λw + 1)/2)` (taking `s = 1`),
/// by a full two-dimensional rule.
pub fn shrink_oracle(w: f64, p: usize, n: usize, a: f64, b: f64) -> f64 {
    let big_n = (p + n) as f64 / 2.0;
    let mut den = Vec::new();
    let mut num = Vec::new();
    for (lam, lamc, wl) in tanh_sinh(1.0 / 64.0, 6.0) {
        let beta = lam * w + 1.0;
        let log_lam = (0.5 * p as f64 + a) * lam.ln() + b * lamc.ln() + wl.ln();
        for (ly, lw) in exp_sinh_log(2.0 * big_n / beta, 1.0 / 32.0, 4.5) {
            // One η for the scaled loss, `N - 1` from the posterior.
            let l = log_lam + lw + big_n * ly - 0.5 * ly.exp() * beta;
            den.push((l, 1.0));
            num.push((l, lam));
        }
    }
    let (d0, d) = scaled_sum(&den);
    let (n0, nn) = scaled_sum(&num);
    (n0 - d0).exp() * nn / d
}

/// `ln` of the χ²_ν density at `y`.
fn ln_chi2(nu: f64, y: f64) -> f64 {
    (0.5 * nu - 1.0) * y.ln() - 0.5 * y - 0.5 * nu * 2f64.ln() - ln_gamma(0.5 * nu)
}

/// `∫_{y0}^∞ y^{-power} χ²_ν(y) dy` by exp-sinh in `y - y0`.
fn chi2_tail(nu: f64, y0: f64, power: f64) -> f64 {
    let center = (nu - y0).max(2.0 * nu.max(1.0).sqrt());
    exp_sinh_log(center, 1.0 / 32.0, 4.5)
        .into_iter()
        .map(|(lu, lw)| {
            let y = y0 + lu.exp();
            (lw + ln_chi2(nu, y) - power * y.ln()).exp()
        })
        .sum()
}

/// `E[k(cY)/(cY)]` for `Y ~ χ²_ν`, `k(r)/r = r^{-1/2}` below 1 and `1/r` above.
/// The part below `y = 1/c` is `E[(cY)^{-1/2}]` minus its tail above `1/c`.
pub fn chi_k_moment(nu: f64, c: f64) -> f64 {
    let y0 = 1.0 / c;
    let full = (ln_gamma(0.5 * nu - 0.5) - ln_gamma(0.5 * nu)).exp() / (2.0 * c).sqrt();
    let below = full - chi2_tail(nu, y0, 0.5) / c.sqrt();
    below + chi2_tail(nu, y0, 1.0) / c
}

/// `ln A(x, s)` with the `η` integral done in closed form. Given `λ` the
/// Poisson(`cη‖x‖²/2`) index of the noncentral chi-square, integrated against
/// `η^{N-1} e^{-η(λ‖x‖²+s)/2}`, becomes a negative binomial with success
/// probability `1 - cz`, `z = ‖x‖²/(‖x‖²+s)`, `N = (p+n)/2`.
pub fn a_log_oracle(x_norm: f64, s: f64, p: usize, n: usize, a: f64, b: f64) -> f64 {
    let (pf, nf) = (p as f64, n as f64);
    let big_n = 0.5 * (pf + nf);
    let xx = x_norm * x_norm;
    let z = xx / (xx + s);
    let log_const = (0.5 * nf - 1.0) * s.ln() - ln_gamma(0.5 * nf) - 0.5 * nf * 2f64.ln()
        - 0.5 * pf * (2.0 * PI).ln()
        - ln_beta(a + 1.0, b + 1.0)
        + ln_gamma(big_n)
        + big_n * (2.0 / (xx + s)).ln();
    let total: f64 = tanh_sinh(1.0 / 32.0, 5.0)
        .into_iter()
        .map(|(lam, c, wl)| {
            let q = c * z;
            // Negative binomial pmf, summed until its tail is negligible.
            let mut pmf = (big_n * (1.0 - q).ln()).exp();
            let mut acc = 0.0;
            let mut j = 0usize;
            loop {
                acc += pmf * chi_k_moment(pf + 2.0 * j as f64, c);
                let next = pmf * q * (big_n + j as f64) / (j as f64 + 1.0);
                j += 1;
                let mean = big_n * q / (1.0 - q);
                if (j as f64 > mean && next < 1e-17 * acc) || pmf == 0.0 && j as f64 > mean {
                    break;
                }
                pmf = next;
            }
            wl * (((0.5 * pf + a) * lam.ln() + b * c.ln() - big_n * (1.0 - q).ln()).exp()) * acc
        })
        .sum();
    log_const + total.ln()
}

/// `Q₂` for `p = 4`. Swapping the order of integration turns each `r` moment
/// of the prior into `∫ ξ^{b-2} (1+ξ)^{-(a+b+2)} (2ξ)^{q+1} Γ(q+1)
/// P(q+1, 1/(2ξ)) dξ`, where `P(3/2, x) = erf√x − 2√(x/π) e^{-x}` and
/// `P(2, x) = 1 − (1+x) e^{-x}`. The `ξ` integral is a trapezoid sum in
/// `ln ξ` with step `step`, which is spectrally accurate for this smooth,
/// rapidly decaying integrand.
pub fn q2_oracle_p4(a: f64, b: f64, step: f64) -> f64 {
    let p_three_halves = |x: f64| libm::erf(x.sqrt()) - 2.0 * (x / PI).sqrt() * (-x).exp();
    let p_two = |x: f64| -(-x).exp_m1() - x * (-x).exp();
    let (mut num, mut den) = (0.0, 0.0);
    // Both tails decay at least like exp(-rate·|ln ξ|).
    let rate = (b + 0.5).min(a + 1.0);
    let n = (40.0 / rate / step).round() as i64;
    for k in -n..=n {
        let y = k as f64 * step;
        let xi = y.exp();
        let x = 0.5 / xi;
        let base = (b - 2.0) * y - (a + b + 2.0) * y.exp().ln_1p() + y;
        num += (base + 1.5 * (2.0 * xi).ln()).exp() * (0.5 * PI.sqrt()) * p_three_halves(x);
        den += (base + 2.0 * (2.0 * xi).ln()).exp() * p_two(x);
    }
    num / den
}

/// `(ψ(0; j, k), ψ(1; j, k))`: `Γ(N)(2k)^N` times `B(p/2+a+1, b+1)` at
/// `z = 0` and `B(p/2+a+1, (n/2-a)(j+1))` at `z = 1`, with
/// `N = (p+n)/2 + 1 + (n/2-a) j`.
pub fn psi_endpoints_oracle(p: usize, n: usize, a: f64, b: f64, j: f64, k: f64) -> (f64, f64) {
    let (pf, nf) = (p as f64, n as f64);
    let big = 0.5 * (pf + nf) + 1.0 + (0.5 * nf - a) * j;
    let front = ln_gamma(big) + big * (2.0 * k).ln();
    (
        (front + ln_beta(0.5 * pf + a + 1.0, b + 1.0)).exp(),
        (front + ln_beta(0.5 * pf + a + 1.0, (0.5 * nf - a) * (j + 1.0))).exp(),
    )
}

/// Gamma density with the given shape and scale.
pub fn gamma_pdf(v: f64, shape: f64, scale: f64) -> f64 {
    ((shape - 1.0) * v.ln() - v / scale - shape * scale.ln() - ln_gamma(shape)).exp()
}

/// `∫_0^∞ f(v) dv` by exp-sinh about `center`.
pub fn positive_axis_integral(f: impl Fn(f64) -> f64, center: f64) -> f64 {
    exp_sinh_log(center, 1.0 / 64.0, 5.0)
        .into_iter()
        .map(|(ly, lw)| {
            let v = ly.exp();
            if v == 0.0 || v.is_infinite() {
                0.0
            } else {
                lw.exp() * f(v)
            }
        })
        .sum()
}
