//! Numerical checks of the quantities behind the admissibility argument:
//! the tapered-prior identity, the `B_i(x, s)` profile, the `A(x, s)`
//! bound shape, the `Q₂` constant and the elementary inequalities.

mod abound;
mod inequalities;

use std::cell::RefCell;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::numerics::quadrature::{integrate_segments, integrate_segments_nodes, QuadratureSpec};
use crate::prior::{prior_log_density_r, theta_mass, HyperParams, MixtureDensity, MixtureDensityParams, Problem};

pub use abound::{a_bound_check, a_log_value, a_value, k_over_r, normalized_a, A_POISSON_TAIL};
pub use inequalities::{inequality_suite, MIN_INEQUALITY_SAMPLES};

/// One evaluated grid point or sub-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailRecord {
    pub label: String,
    pub values: BTreeMap<String, f64>,
}

impl DetailRecord {
    pub fn new(label: impl Into<String>, values: &[(&str, f64)]) -> Self {
        Self {
            label: label.into(),
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// Outcome of an empirical bound check: `passed` iff the statistic is finite,
/// at most `cap`, and every point-level condition held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub quantity: String,
    pub grid: String,
    pub sup_statistic: f64,
    pub cap: f64,
    pub passed: bool,
    pub summary: BTreeMap<String, f64>,
    pub details: Vec<DetailRecord>,
    pub note: Option<String>,
}

/// Moments of `H_i(V/s)` under `f(v | z)` on one shared node set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaperMoments {
    pub mean: f64,
    /// `mean² + centered second moment`; never below `mean²`.
    pub second_moment: f64,
    /// `1 - mean² / second_moment`, formed as `variance / second_moment`.
    pub b: f64,
}

/// `E[H_i(V/s) | z]`, `E[H_i²(V/s) | z]` and `B_i = 1 - E[H]²/E[H²]`.
pub fn b_i_moments(
    s: f64,
    z: f64,
    i: u32,
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<TaperMoments> {
    const NAME: &str = "b_i";
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(NAME, format!("s must be positive, got {s}")));
    }
    if i == 0 {
        return Err(domain(NAME, "index must be at least 1"));
    }
    let density = MixtureDensity::new(MixtureDensityParams::new(*problem, *hyper, z)?, spec)?;
    let log_s = s.ln();
    let fi = i as f64;
    let failure = RefCell::new(None);
    let integrand = |y: f64| {
        let v = y.exp();
        if v == 0.0 || v.is_infinite() {
            return [0.0; 3];
        }
        match density.log_density(v) {
            Ok(lf) => {
                let f = (lf + y).exp();
                let h = 1.0 / (fi + (y - log_s).abs());
                [f, f * h, f * h * h]
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                [f64::NAN; 3]
            }
        }
    };
    let [m0, m1] = density.log_v_landmarks();
    let breaks = crate::prior::sorted_breaks(f64::NEG_INFINITY, f64::INFINITY, &[m0, m1, log_s]);
    let result = integrate_segments_nodes(integrand, &breaks, 1.0, spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !result.converged {
        return Err(crate::error::Error::Quadrature {
            function: NAME,
            value: result.values[0],
            error_estimate: result.errors[0],
        });
    }
    let mass: f64 = result.nodes.iter().map(|n| n.weight * n.values[0]).sum();
    let first: f64 = result.nodes.iter().map(|n| n.weight * n.values[1]).sum();
    let mean = first / mass;
    let spread: f64 = result
        .nodes
        .iter()
        .filter(|n| n.values[0] > 0.0)
        .map(|n| {
            let d = n.values[1] / n.values[0] - mean;
            n.weight * n.values[0] * d * d
        })
        .sum();
    let variance = spread / mass;
    let second_moment = mean * mean + variance;
    Ok(TaperMoments {
        mean,
        second_moment,
        b: variance / second_moment,
    })
}

/// `B_i(x, s)` at `z = ‖x‖²/(‖x‖² + s)`; lies in `[0, 1)`.
pub fn b_i(s: f64, z: f64, i: u32, problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    b_i_moments(s, z, i, problem, hyper, spec).map(|m| m.b)
}

/// Default grids for the `B_i` profile.
pub fn default_s_grid() -> Vec<f64> {
    crate::numerics::log_grid(1e-6, 1e6, 25)
}
pub const DEFAULT_Z_SET: [f64; 4] = [0.0, 0.3, 0.7, 0.99];
pub const DEFAULT_I_SET: [u32; 3] = [1, 10, 100];

/// Every fourth point of a grid plus its last point; the cap of a bound
/// profile is twice the supremum observed here.
pub fn coarse_subgrid<T: Copy>(grid: &[T]) -> Vec<T> {
    let mut coarse: Vec<T> = grid.iter().copied().step_by(4).collect();
    if (grid.len() - 1) % 4 != 0 {
        coarse.push(grid[grid.len() - 1]);
    }
    coarse
}

pub const CAP_FACTOR: f64 = 2.0;

/// `sup_{i, z} B_i(s, z)·(1 + |ln s|)²` per `s`, and its supremum over `s`.
pub fn b_i_bound_profile(
    i_set: &[u32],
    s_grid: &[f64],
    z_set: &[f64],
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<BoundCheckReport> {
    if i_set.is_empty() || s_grid.is_empty() || z_set.is_empty() {
        return Err(domain("b_i_bound_profile", "grids must be nonempty"));
    }
    if !(hyper.a < problem.half_n()) {
        return Err(domain("b_i_bound_profile", "requires a < n/2"));
    }
    let points: Vec<(usize, u32, f64)> = s_grid
        .iter()
        .enumerate()
        .flat_map(|(k, _)| i_set.iter().flat_map(move |&i| z_set.iter().map(move |&z| (k, i, z))))
        .collect();
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|&(k, i, z)| b_i(s_grid[k], z, i, problem, hyper, spec))
        .collect();
    let mut details = Vec::with_capacity(points.len());
    let mut in_range = true;
    let mut per_s = vec![f64::NEG_INFINITY; s_grid.len()];
    let mut per_i: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(k, i, z), value) in points.iter().zip(values) {
        let b = value?;
        let s = s_grid[k];
        let stat = b * (1.0 + s.ln().abs()).powi(2);
        in_range &= (0.0..1.0).contains(&b);
        per_s[k] = per_s[k].max(stat);
        let entry = per_i.entry(i).or_insert(f64::NEG_INFINITY);
        *entry = entry.max(stat);
        details.push(DetailRecord::new(
            "point",
            &[("i", i as f64), ("s", s), ("z", z), ("b", b), ("statistic", stat)],
        ));
    }
    let sup = per_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let indices: Vec<usize> = (0..s_grid.len()).collect();
    let coarse_sup = coarse_subgrid(&indices)
        .into_iter()
        .map(|k| per_s[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let cap = CAP_FACTOR * coarse_sup;
    let mut summary: BTreeMap<String, f64> = per_i.iter().map(|(i, v)| (format!("sup_i_{i}"), *v)).collect();
    summary.insert("coarse_sup".into(), coarse_sup);
    let passed = in_range && sup.is_finite() && sup <= cap;
    Ok(BoundCheckReport {
        quantity: "b_i_bound_profile".into(),
        grid: format!(
            "i in {:?}; {} s values in [{:e}, {:e}]; z in {:?}",
            i_set,
            s_grid.len(),
            s_grid[0],
            s_grid[s_grid.len() - 1],
            z_set
        ),
        sup_statistic: sup,
        cap,
        passed,
        summary,
        details,
        note: (!in_range).then(|| "some B_i value fell outside [0, 1)".to_string()),
    })
}

/// `∫_0^1 π(r) r^{p/2-3/2} dr / ∫_0^1 π(r) r^{p/2-1} dr`.
pub fn q2_constant(problem: &Problem, hyper: &HyperParams, spec: &QuadratureSpec) -> Result<f64> {
    const NAME: &str = "q2_constant";
    problem.validate()?;
    hyper.validate()?;
    if problem.p < 2 {
        return Err(domain(NAME, "requires p >= 2; the numerator diverges for p = 1"));
    }
    if !(hyper.b > -0.5) {
        return Err(domain(NAME, "requires b > -1/2; the numerator diverges otherwise"));
    }
    let half_p = problem.half_p();
    // Decay rate of the numerator integrand in x = ln r as x → -∞.
    let rate = (hyper.b + 0.5).min(half_p - 0.5);
    let scale = (1.0 / rate).clamp(1.0, 1e3);
    let moment = |power: f64| -> Result<f64> {
        let failure = RefCell::new(None);
        let integrand = |x: f64| {
            let r = x.exp();
            if r == 0.0 {
                return 0.0;
            }
            match prior_log_density_r(r, problem, hyper, spec) {
                Ok(lp) => (lp + (power + 1.0) * x).exp(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let result = integrate_segments(integrand, &[f64::NEG_INFINITY, -1.0, 0.0], scale, spec)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        result.require(NAME)
    };
    Ok(moment(half_p - 1.5)? / moment(half_p - 1.0)?)
}

/// `∫_{-∞}^0` and `∫_0^∞` of `i² / (i + |y|)²`, the two halves of
/// `∫ η^{-1} h_i(η)² dη` in `y = ln η`.
pub fn h_integral_halves(i: u32, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    if i == 0 {
        return Err(domain("h_integral", "index must be at least 1"));
    }
    let fi = i as f64;
    let f = |y: f64| {
        let h = fi / (fi + y.abs());
        h * h
    };
    let left = integrate_segments(f, &[f64::NEG_INFINITY, 0.0], 1.0, spec)?.require("h_integral")?;
    let right = integrate_segments(f, &[0.0, f64::INFINITY], 1.0, spec)?.require("h_integral")?;
    Ok((left, right))
}

pub const H_INTEGRAL_TOLERANCE: f64 = 1e-6;

/// Checks `∫ η^{-1} h_i² dη = 2i` for each `i`, and that the tapered prior's
/// total mass factorizes as (mass over `θ`, which is 1) × `2i`.
pub fn h_integral_check(
    i_set: &[u32],
    problem: &Problem,
    hyper: &HyperParams,
    spec: &QuadratureSpec,
) -> Result<BoundCheckReport> {
    if i_set.is_empty() {
        return Err(domain("h_integral_check", "index set must be nonempty"));
    }
    let mass = theta_mass(problem, hyper, spec)?;
    let mut details = Vec::new();
    let mut worst = (mass - 1.0).abs();
    for &i in i_set {
        let (left, right) = h_integral_halves(i, spec)?;
        let target = 2.0 * i as f64;
        let total = left + right;
        let rel = (total - target).abs() / target;
        worst = worst.max(rel);
        details.push(DetailRecord::new(
            format!("i={i}"),
            &[
                ("i", i as f64),
                ("left", left),
                ("right", right),
                ("total", total),
                ("relative_error", rel),
                ("prior_mass", mass * total),
            ],
        ));
    }
    let mut summary = BTreeMap::new();
    summary.insert("theta_mass".to_string(), mass);
    Ok(BoundCheckReport {
        quantity: "h_integral".into(),
        grid: format!("i in {i_set:?}"),
        sup_statistic: worst,
        cap: H_INTEGRAL_TOLERANCE,
        passed: worst.is_finite() && worst <= H_INTEGRAL_TOLERANCE,
        summary,
        details,
        note: None,
    })
}
