//! The noisy calibration objective: theta to the K-S statistic against the
//! reference sample set, with every evaluation logged exactly once.

use crate::eligibility::EvalContext;
use crate::seeds;
use crate::Result;

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub index: usize,
    /// Unit-cube coordinates searched by the strategies.
    pub unit: Vec<f64>,
    /// Native parameter values.
    pub theta: Vec<f64>,
    pub statistic: f64,
    pub critical_value: f64,
    pub eligible: bool,
}

/// Sequential objective wrapper owning the evaluation log and the simulator
/// seed counter. One instance per (strategy, seed) cell.
pub struct Objective<'a> {
    ctx: EvalContext<'a>,
    master_seed: u64,
    stream: u64,
    counter: u64,
    pub log: Vec<Evaluation>,
}

impl<'a> Objective<'a> {
    /// `stream` tags the simulator seed stream; cells use disjoint streams
    /// and all of them stay disjoint from the real-data block.
    pub fn new(ctx: EvalContext<'a>, master_seed: u64, stream: u64) -> Self {
        Objective {
            ctx,
            master_seed,
            stream,
            counter: 0,
            log: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.ctx.space.dim()
    }

    pub fn context(&self) -> &EvalContext<'a> {
        &self.ctx
    }

    pub fn evals_used(&self) -> usize {
        self.log.len()
    }

    /// Evaluate at unit-cube coordinates: runs `n_sim` fresh replications,
    /// logs the result, returns the statistic.
    pub fn eval(&mut self, unit: &[f64]) -> Result<f64> {
        let theta = self.ctx.space.from_unit(unit);
        let block: Vec<u64> = (0..self.ctx.n_sim as u64)
            .map(|i| seeds::derive(self.master_seed, self.stream, self.counter + i))
            .collect();
        self.counter += self.ctx.n_sim as u64;
        let record = self.ctx.evaluate_theta(&theta, &block)?;
        self.log.push(Evaluation {
            index: self.log.len(),
            unit: unit.to_vec(),
            theta,
            statistic: record.ks.statistic,
            critical_value: record.ks.critical_value,
            eligible: record.ks.eligible,
        });
        Ok(record.ks.statistic)
    }

    /// Best observed statistic so far.
    pub fn best(&self) -> Option<f64> {
        self.log
            .iter()
            .map(|e| e.statistic)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    /// Unit coordinates of the best observed evaluation.
    pub fn best_unit(&self) -> Option<&[f64]> {
        self.log
            .iter()
            .min_by(|a, b| a.statistic.partial_cmp(&b.statistic).unwrap())
            .map(|e| e.unit.as_slice())
    }
}
