//! The hierarchical prior family and the densities derived from it.
//!
//! The prior on `(θ, η)` is `η^{-1} · η^{p/2} π(η‖θ‖² | a, b)`, where
//! `π(r | a, b)` is a scale mixture of normal densities in `r = ‖θ‖²` with a
//! Beta(`a+1`, `b+1`) mixing law on the shrinkage weight `λ`.

mod density;
mod mixture;
mod taper;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use density::{
    log_slope, prior_density_deriv, prior_density_r, prior_density_r_lambda_form, prior_log_density_r,
    theta_mass,
};
pub use mixture::{
    f_density, f_log_moment, log_psi_general, psi_closed_endpoints, psi_general, psi_general_quadrature,
    MixtureConstants, MixtureDensity, MomentRegion,
};
pub use taper::{h_blyth, h_blyth_scaled};
pub(crate) use mixture::sorted_breaks;

/// Sampling configuration: dimension `p` of `X` and degrees of freedom `n` of `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub p: usize,
    pub n: usize,
}

impl Problem {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        let problem = Self { p, n };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 || self.n < 1 {
            return Err(Error::InvalidSpec(format!(
                "p and n must be at least 1, got p={} n={}",
                self.p, self.n
            )));
        }
        Ok(())
    }

    pub fn half_p(&self) -> f64 {
        self.p as f64 / 2.0
    }

    pub fn half_n(&self) -> f64 {
        self.n as f64 / 2.0
    }
}

/// Exponents of the Beta mixing density `λ^a (1-λ)^b / B(a+1, b+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub a: f64,
    pub b: f64,
}

impl HyperParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let hyper = Self { a, b };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > -1.0) || !(self.b > -1.0) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "hyperparameters must satisfy a > -1 and b > -1, got a={} b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Parameters of the conditional density `f(v | z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureDensityParams {
    pub problem: Problem,
    pub hyper: HyperParams,
    pub z: f64,
}

impl MixtureDensityParams {
    pub fn new(problem: Problem, hyper: HyperParams, z: f64) -> Result<Self> {
        let params = Self { problem, hyper, z };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.hyper.validate()?;
        if !(0.0..1.0).contains(&self.z) {
            return Err(Error::InvalidSpec(format!("z must lie in [0, 1), got {}", self.z)));
        }
        if !(self.problem.half_n() - self.hyper.a > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "moments of f(v|z) require n/2 - a > 0, got n={} a={}",
                self.problem.n, self.hyper.a
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_out_of_range_values() {
        assert!(Problem::new(0, 3).is_err());
        assert!(Problem::new(3, 0).is_err());
        assert!(HyperParams::new(-1.0, 0.0).is_err());
        assert!(HyperParams::new(0.0, -1.2).is_err());
        let problem = Problem::new(4, 4).unwrap();
        let hyper = HyperParams::new(0.0, 0.0).unwrap();
        assert!(MixtureDensityParams::new(problem, hyper, 1.0).is_err());
        assert!(MixtureDensityParams::new(problem, HyperParams::new(2.0, 0.0).unwrap(), 0.2).is_err());
        assert!(MixtureDensityParams::new(problem, hyper, 0.0).is_ok());
    }
}
