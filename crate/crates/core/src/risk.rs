//! Monte Carlo frequentist risk under the scaled quadratic loss `η‖d - θ‖²`.
//!
//! Replicates are drawn in fixed-size chunks. Chunk `c` of a run with seed
//! `s` uses ChaCha20 seeded from `s` on stream `c`, and chunk summaries are
//! merged in chunk order, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::estimator::{estimate, EstimatorSpec, Observation};
use crate::prior::Problem;

/// Replicates per independently seeded stream.
pub const CHUNK_SIZE: u64 = 1024;
pub const MIN_REPS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterPoint {
    pub theta: Vec<f64>,
    /// Precision `1/σ²`.
    pub eta: f64,
}

impl ParameterPoint {
    pub fn new(theta: Vec<f64>, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(domain("ParameterPoint", format!("eta must be positive, got {eta}")));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(domain("ParameterPoint", "theta must be finite"));
        }
        Ok(Self { theta, eta })
    }

    /// `θ = (norm, 0, …, 0)`.
    pub fn on_first_axis(p: usize, norm: f64, eta: f64) -> Result<Self> {
        let mut theta = vec![0.0; p];
        if p > 0 {
            theta[0] = norm;
        }
        Self::new(theta, eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean: f64,
    /// Sample standard deviation of the losses over `sqrt(reps)`.
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
}

/// The decision rule whose risk is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionRule {
    /// `δ(x, s) = x`, with constant risk `p`.
    Identity,
    GeneralizedBayes(EstimatorSpec),
}

impl From<EstimatorSpec> for DecisionRule {
    fn from(spec: EstimatorSpec) -> Self {
        DecisionRule::GeneralizedBayes(spec)
    }
}

/// Draws `x = θ + σZ` and `s = σ² G`, `G ~ Gamma(n/2, scale 2)`.
pub fn sample_observation<R: Rng + ?Sized>(point: &ParameterPoint, problem: &Problem, rng: &mut R) -> Observation {
    let sigma2 = 1.0 / point.eta;
    let sigma = sigma2.sqrt();
    let x = point
        .theta
        .iter()
        .map(|t| {
            let z: f64 = StandardNormal.sample(rng);
            t + sigma * z
        })
        .collect();
    let chi2 = Gamma::new(problem.half_n(), 2.0).expect("n >= 1 gives a valid shape");
    let s = sigma2 * chi2.sample(rng);
    Observation { x, s }
}

/// `η ‖d - θ‖²`.
pub fn loss(d: &[f64], point: &ParameterPoint) -> Result<f64> {
    if d.len() != point.theta.len() {
        return Err(Error::DimensionMismatch {
            expected: point.theta.len(),
            got: d.len(),
        });
    }
    Ok(point.eta * d.iter().zip(&point.theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
}

/// RNG for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer applied to `master + (row + 1)·γ`; used to give each
/// row of a table its own seed.
pub fn derive_seed(master: u64, row: u64) -> u64 {
    let mut z = master.wrapping_add(row.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Count, mean and centered sum of squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }
}

fn check_rule(rule: &DecisionRule, problem: &Problem, point: &ParameterPoint) -> Result<()> {
    problem.validate()?;
    if point.theta.len() != problem.p {
        return Err(Error::DimensionMismatch {
            expected: problem.p,
            got: point.theta.len(),
        });
    }
    if let DecisionRule::GeneralizedBayes(spec) = rule {
        spec.validate()?;
        if spec.problem != *problem {
            return Err(Error::InvalidSpec(format!(
                "estimator is configured for p={} n={}, risk requested for p={} n={}",
                spec.problem.p, spec.problem.n, problem.p, problem.n
            )));
        }
    }
    Ok(())
}

/// Monte Carlo estimate of `E[η‖δ(X, S) - θ‖²]` from `reps` replicates.
pub fn mc_risk(
    rule: &DecisionRule,
    problem: &Problem,
    point: &ParameterPoint,
    reps: u64,
    seed: u64,
) -> Result<RiskEstimate> {
    check_rule(rule, problem, point)?;
    if reps < MIN_REPS {
        return Err(domain("mc_risk", format!("reps must be at least {MIN_REPS}, got {reps}")));
    }
    let chunks = reps.div_ceil(CHUNK_SIZE);
    let summaries: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let count = CHUNK_SIZE.min(reps - chunk * CHUNK_SIZE);
            let mut moments = Moments::default();
            for _ in 0..count {
                let obs = sample_observation(point, problem, &mut rng);
                let value = match rule {
                    DecisionRule::Identity => loss(&obs.x, point)?,
                    DecisionRule::GeneralizedBayes(spec) => loss(&estimate(&obs, spec)?, point)?,
                };
                moments.push(value);
            }
            Ok(moments)
        })
        .collect();
    let mut total = Moments::default();
    for summary in summaries {
        total = total.merge(summary?);
    }
    let variance = total.m2 / (total.count - 1) as f64;
    Ok(RiskEstimate {
        mean: total.mean,
        std_error: (variance / total.count as f64).sqrt(),
        reps,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskRow {
    pub theta_norm: f64,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

/// One [`mc_risk`] row per `‖θ‖` (placed on the first axis), row `i` seeded
/// with [`derive_seed`]`(seed, i)`.
pub fn risk_curve(
    rule: &DecisionRule,
    problem: &Problem,
    theta_norm_grid: &[f64],
    eta: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<RiskRow>> {
    if theta_norm_grid.is_empty() {
        return Err(domain("risk_curve", "theta grid must be nonempty"));
    }
    if theta_norm_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(domain("risk_curve", "theta norms must be finite and nonnegative"));
    }
    theta_norm_grid
        .iter()
        .enumerate()
        .map(|(row, &norm)| {
            let point = ParameterPoint::on_first_axis(problem.p, norm, eta)?;
            let row_seed = derive_seed(seed, row as u64);
            let r = mc_risk(rule, problem, &point, reps, row_seed)?;
            Ok(RiskRow {
                theta_norm: norm,
                mean: r.mean,
                std_error: r.std_error,
                seed: row_seed,
            })
        })
        .collect()
}
