//! Trust-region Bayesian optimization with Thompson-sampling acquisition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gp::{GpModel, KernelFamily};
use crate::optimize::{sample_unit, Budget, Objective, Strategy, Trace};
use crate::seeds;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct TrustRegionParams {
    pub tau_succ: usize,
    pub tau_fail: usize,
    pub l_min: f64,
    pub l_max: f64,
    pub l_init: f64,
}

impl TrustRegionParams {
    /// Single-region, unit-batch settings: tau_succ = 1, tau_fail = d,
    /// L_min = 2^-7, L_max = 1.6, L_init = 0.8.
    pub fn defaults_for_dim(dim: usize) -> Self {
        TrustRegionParams {
            tau_succ: 1,
            tau_fail: dim.max(1),
            l_min: 2f64.powi(-7),
            l_max: 1.6,
            l_init: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionUpdate {
    None,
    Expanded,
    Shrunk,
    /// Side length fell below L_min; the region must restart.
    Restart,
}

/// Success/failure-driven side-length state of one trust region.
#[derive(Debug, Clone)]
pub struct TrustRegion {
    pub length: f64,
    pub successes: usize,
    pub failures: usize,
    pub params: TrustRegionParams,
}

impl TrustRegion {
    pub fn new(params: TrustRegionParams) -> Self {
        TrustRegion {
            length: params.l_init,
            successes: 0,
            failures: 0,
            params,
        }
    }

    /// Record the outcome of one evaluation and apply any threshold update.
    /// Counters reset whenever a threshold fires.
    pub fn record(&mut self, improved: bool) -> RegionUpdate {
        if improved {
            self.successes += 1;
            if self.successes >= self.params.tau_succ {
                self.length = (2.0 * self.length).min(self.params.l_max);
                self.successes = 0;
                self.failures = 0;
                return RegionUpdate::Expanded;
            }
        } else {
            self.failures += 1;
            if self.failures >= self.params.tau_fail {
                self.length /= 2.0;
                self.successes = 0;
                self.failures = 0;
                if self.length < self.params.l_min {
                    return RegionUpdate::Restart;
                }
                return RegionUpdate::Shrunk;
            }
        }
        RegionUpdate::None
    }
}

pub struct Turbo {
    pub family: KernelFamily,
    /// Thompson-sampling candidate count per round.
    pub ts_candidates: usize,
    /// Overrides `TrustRegionParams::defaults_for_dim` when set.
    pub region_params: Option<TrustRegionParams>,
}

impl Default for Turbo {
    fn default() -> Self {
        Turbo {
            family: KernelFamily::Matern52,
            ts_candidates: 500,
            region_params: None,
        }
    }
}

impl Strategy for Turbo {
    fn name(&self) -> &'static str {
        "turbo"
    }

    fn run(&self, objective: &mut Objective, budget: Budget, seed: u64) -> Result<Trace> {
        let dim = objective.dim();
        let params = self
            .region_params
            .unwrap_or_else(|| TrustRegionParams::defaults_for_dim(dim));
        let mut rng_init = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 2, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 3, 0));

        'restart: while objective.evals_used() < budget.n_total {
            let mut region = TrustRegion::new(params);
            // Fresh initial points per region, truncated by remaining budget.
            let first_region = objective.evals_used() == 0;
            let n_init = if first_region { budget.n_init } else { 2 * dim };
            let region_start = objective.evals_used();
            let mut local_best = f64::INFINITY;
            let mut local_best_unit = vec![0.5; dim];
            for _ in 0..n_init.min(budget.n_total - objective.evals_used()) {
                let u = sample_unit(&mut rng_init, dim);
                let y = objective.eval(&u)?;
                if y < local_best {
                    local_best = y;
                    local_best_unit = u;
                }
            }

            while objective.evals_used() < budget.n_total {
                let center = &local_best_unit;
                // Region-local training data, all points while few exist.
                let in_region: Vec<usize> = objective.log[region_start..]
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| {
                        e.unit
                            .iter()
                            .zip(center)
                            .all(|(&x, &c)| (x - c).abs() <= region.length / 2.0 + 1e-12)
                    })
                    .map(|(i, _)| region_start + i)
                    .collect();
                let idxs: Vec<usize> = if in_region.len() >= 2 * dim {
                    in_region
                } else {
                    (0..objective.evals_used()).collect()
                };
                let xs: Vec<Vec<f64>> = idxs.iter().map(|&i| objective.log[i].unit.clone()).collect();
                let ys: Vec<f64> = idxs.iter().map(|&i| objective.log[i].statistic).collect();

                let next = match GpModel::fit(&xs, &ys, self.family, &mut rng) {
                    Ok(model) => {
                        // Per-dimension widths scaled by normalized
                        // lengthscales, clipped to the unit cube.
                        let ells = &model.kernel.lengthscales;
                        let geo_mean = ells.iter().map(|l| l.ln()).sum::<f64>() / dim as f64;
                        let geo_mean = geo_mean.exp();
                        let half_widths: Vec<f64> = ells
                            .iter()
                            .map(|&l| (region.length / 2.0) * (l / geo_mean))
                            .collect();
                        let candidates: Vec<Vec<f64>> = (0..self.ts_candidates)
                            .map(|_| {
                                center
                                    .iter()
                                    .zip(&half_widths)
                                    .map(|(&c, &hw)| {
                                        let lo = (c - hw).max(0.0);
                                        let hi = (c + hw).min(1.0);
                                        if hi > lo {
                                            rng.gen_range(lo..hi)
                                        } else {
                                            c.clamp(0.0, 1.0)
                                        }
                                    })
                                    .collect()
                            })
                            .collect();
                        let draw = model.posterior_sample(&candidates, &mut rng)?;
                        let (best_idx, _) = draw
                            .iter()
                            .enumerate()
                            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                            .expect("candidates non-empty");
                        candidates[best_idx].clone()
                    }
                    Err(_) => sample_unit(&mut rng, dim),
                };

                let y = objective.eval(&next)?;
                let improved = y < local_best;
                if improved {
                    local_best = y;
                    local_best_unit = next;
                }
                if region.record(improved) == RegionUpdate::Restart {
                    continue 'restart;
                }
            }
            break;
        }

        Ok(Trace::from_log(self.name(), seed, objective.log.clone()))
    }
}
