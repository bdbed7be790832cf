//! Acquisition functions for minimization of the K-S objective.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionKind {
    Ei,
    Pi,
    Lcb,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Expected improvement below `best` under `N(mean, sigma^2)`. Collapses to
/// `max(best - mean, 0)` when sigma is zero.
pub fn expected_improvement(mean: f64, sigma: f64, best: f64) -> f64 {
    if sigma <= 0.0 {
        return (best - mean).max(0.0);
    }
    let n = std_normal();
    let z = (best - mean) / sigma;
    (best - mean) * n.cdf(z) + sigma * n.pdf(z)
}

/// Probability of improvement below `best`. Collapses to the indicator of
/// `mean < best` when sigma is zero.
pub fn probability_of_improvement(mean: f64, sigma: f64, best: f64) -> f64 {
    if sigma <= 0.0 {
        return if mean < best { 1.0 } else { 0.0 };
    }
    std_normal().cdf((best - mean) / sigma)
}

/// Lower confidence bound `mean - kappa * sigma`; smaller is better.
pub fn lower_confidence_bound(mean: f64, sigma: f64, kappa: f64) -> f64 {
    mean - kappa * sigma
}

impl AcquisitionKind {
    /// Score where larger is always better, so all kinds maximize uniformly.
    pub fn score(&self, mean: f64, sigma: f64, best: f64, lcb_kappa: f64) -> f64 {
        match self {
            AcquisitionKind::Ei => expected_improvement(mean, sigma, best),
            AcquisitionKind::Pi => probability_of_improvement(mean, sigma, best),
            AcquisitionKind::Lcb => -lower_confidence_bound(mean, sigma, lcb_kappa),
        }
    }
}
