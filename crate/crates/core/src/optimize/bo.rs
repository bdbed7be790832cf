//! Standard Bayesian optimization with a mixed EI/PI/LCB acquisition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gp::{GpModel, KernelFamily};
use crate::optimize::{sample_unit, AcquisitionKind, Budget, Objective, Strategy, Trace};
use crate::seeds;
use crate::Result;

pub struct StandardBo {
    pub family: KernelFamily,
    /// Uniform candidate points scored per acquisition round.
    pub candidates: usize,
    pub lcb_kappa: f64,
}

impl Default for StandardBo {
    fn default() -> Self {
        StandardBo {
            family: KernelFamily::Rbf,
            candidates: 500,
            lcb_kappa: 1.96,
        }
    }
}

impl Strategy for StandardBo {
    fn name(&self) -> &'static str {
        "bo"
    }

    fn run(&self, objective: &mut Objective, budget: Budget, seed: u64) -> Result<Trace> {
        let dim = objective.dim();
        let mut rng_init = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 2, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 3, 0));

        for _ in 0..budget.n_init.min(budget.n_total) {
            let u = sample_unit(&mut rng_init, dim);
            objective.eval(&u)?;
        }

        while objective.evals_used() < budget.n_total {
            let xs: Vec<Vec<f64>> = objective.log.iter().map(|e| e.unit.clone()).collect();
            let ys: Vec<f64> = objective.log.iter().map(|e| e.statistic).collect();
            let next = match GpModel::fit(&xs, &ys, self.family, &mut rng) {
                Ok(model) => {
                    let best_y = objective.best().expect("init evaluations exist");
                    let kind = match rng.gen_range(0..3u8) {
                        0 => AcquisitionKind::Ei,
                        1 => AcquisitionKind::Pi,
                        _ => AcquisitionKind::Lcb,
                    };
                    let mut best_cand: Option<(f64, Vec<f64>)> = None;
                    for _ in 0..self.candidates {
                        let u = sample_unit(&mut rng, dim);
                        let (mu, var) = model.posterior(&u);
                        let score = kind.score(mu, var.sqrt(), best_y, self.lcb_kappa);
                        if best_cand.as_ref().map_or(true, |(s, _)| score > *s) {
                            best_cand = Some((score, u));
                        }
                    }
                    best_cand.expect("candidate count > 0").1
                }
                // Singular fit: fall back to a random point for this round.
                Err(_) => sample_unit(&mut rng, dim),
            };
            objective.eval(&next)?;
        }

        Ok(Trace::from_log(self.name(), seed, objective.log.clone()))
    }
}
