//! Generalized Bayes shrinkage estimation for a normal mean with unknown scale.

pub mod blyth;
pub mod error;
pub mod estimator;
pub mod numerics;
pub mod prior;
pub mod risk;

pub use error::{Error, Result};
