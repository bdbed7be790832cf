//! Calibration search strategies over the K-S objective.
//!
//! Each strategy implements [`Strategy`] and is registered by name; the CLI
//! and harness select strategies at runtime via [`strategy_by_name`].

mod acquisition;
mod bo;
mod objective;
mod random;
mod turbo;

pub use acquisition::{
    expected_improvement, lower_confidence_bound, probability_of_improvement, AcquisitionKind,
};
pub use bo::StandardBo;
pub use objective::{Evaluation, Objective};
pub use random::RandomSearch;
pub use turbo::{RegionUpdate, TrustRegion, TrustRegionParams, Turbo};

use rand::Rng;

use crate::Result;

/// Evaluation budget of one calibration run.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub n_init: usize,
    pub n_total: usize,
}

/// One completed calibration run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub strategy: String,
    pub seed: u64,
    pub evaluations: Vec<Evaluation>,
    /// Monotone non-increasing best observed statistic per evaluation index.
    pub best_so_far: Vec<f64>,
}

impl Trace {
    pub fn from_log(strategy: &str, seed: u64, evaluations: Vec<Evaluation>) -> Self {
        let mut best = f64::INFINITY;
        let best_so_far = evaluations
            .iter()
            .map(|e| {
                best = best.min(e.statistic);
                best
            })
            .collect();
        Trace {
            strategy: strategy.to_string(),
            seed,
            evaluations,
            best_so_far,
        }
    }

    pub fn final_best(&self) -> Option<f64> {
        self.best_so_far.last().copied()
    }

    pub fn found_eligible(&self) -> bool {
        self.evaluations.iter().any(|e| e.eligible)
    }

    /// Index and evaluation of the best observed statistic.
    pub fn best_evaluation(&self) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .min_by(|a, b| a.statistic.partial_cmp(&b.statistic).unwrap())
    }
}

/// A calibration search strategy, selected by name at runtime.
///
/// Under a shared `seed`, all strategies draw identical initial points (the
/// first `n_init` uniform draws come from the same seeded stream), so they
/// start off with the same information.
pub trait Strategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, objective: &mut Objective, budget: Budget, seed: u64) -> Result<Trace>;
}

/// All built-in strategies with their default settings.
pub fn registry() -> Vec<Box<dyn Strategy>> {
    vec![
        Box::new(RandomSearch),
        Box::new(StandardBo::default()),
        Box::new(Turbo::default()),
    ]
}

pub fn strategy_names() -> Vec<&'static str> {
    registry().iter().map(|s| s.name()).collect()
}

pub fn strategy_by_name(name: &str) -> Option<Box<dyn Strategy>> {
    registry().into_iter().find(|s| s.name() == name)
}

pub(crate) fn sample_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}
