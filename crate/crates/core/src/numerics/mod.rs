//! Special functions, adaptive quadrature and series utilities.

pub mod kronrod;
pub mod poisson;
pub mod quadrature;
pub mod special;

pub use poisson::{poisson_weights, poisson_window, PoissonWindow};
pub use quadrature::{
    integrate_interval, integrate_positive_axis, integrate_positive_axis_scaled, integrate_segments,
    integrate_segments_nodes, integrate_unit, IntegrationResult, NodeIntegration, QuadratureSpec,
    WeightedSample,
};
pub use special::{gamma_p, gamma_q, log_beta, log_gamma, log_sum_exp};

/// `points` values spaced evenly in `ln` between `lo` and `hi`, ends included
/// exactly.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (points - 1) as f64;
            (0..points)
                .map(|i| match i {
                    0 => lo,
                    _ if i == points - 1 => hi,
                    _ => (a + step * i as f64).exp(),
                })
                .collect()
        }
    }
}
