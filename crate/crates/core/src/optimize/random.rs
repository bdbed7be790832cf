//! Uniform random search baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::optimize::{sample_unit, Budget, Objective, Strategy, Trace};
use crate::seeds;
use crate::Result;

pub struct RandomSearch;

impl Strategy for RandomSearch {
    fn name(&self) -> &'static str {
        "random"
    }

    fn run(&self, objective: &mut Objective, budget: Budget, seed: u64) -> Result<Trace> {
        let dim = objective.dim();
        // Stream 2 is the shared initial-point stream; random search keeps
        // drawing from it for its whole budget.
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 2, 0));
        for _ in 0..budget.n_total {
            let u = sample_unit(&mut rng, dim);
            objective.eval(&u)?;
        }
        Ok(Trace::from_log(self.name(), seed, objective.log.clone()))
    }
}
