//! Eligibility sets: configurations whose simulated output distribution is
//! statistically indistinguishable from the reference set at level alpha.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::ksdist::{ks_distance, FeatureExtractor, KsResult};
use crate::params::ParamSpace;
use crate::seeds;
use crate::simulator::{run_simulation, SeriesSample, SimConfig};
use crate::{Error, Result};

/// Immutable evaluation context shared by eligibility scans and the
/// optimization objective.
#[derive(Clone)]
pub struct EvalContext<'a> {
    pub space: &'a ParamSpace,
    /// Base configuration; free parameters are overwritten per theta.
    pub base: &'a SimConfig,
    pub real: &'a [SeriesSample],
    pub n_sim: usize,
    pub alpha: f64,
    pub extractor: FeatureExtractor,
}

#[derive(Debug, Clone)]
pub struct EligibilityRecord {
    pub theta: Vec<f64>,
    pub ks: KsResult,
    pub n_sim: usize,
    pub seed_block: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct EligibilityMeta {
    pub alpha: f64,
    pub n_real: usize,
    pub n_sim: usize,
    pub feature_dim: usize,
    pub extractor: FeatureExtractor,
    pub param_names: Vec<String>,
}

/// Records with `ks.eligible == true` under one shared (N, n, alpha, K).
#[derive(Debug, Clone)]
pub struct EligibilitySet {
    pub records: Vec<EligibilityRecord>,
    pub meta: EligibilityMeta,
}

impl<'a> EvalContext<'a> {
    pub fn meta(&self) -> EligibilityMeta {
        EligibilityMeta {
            alpha: self.alpha,
            n_real: self.real.len(),
            n_sim: self.n_sim,
            feature_dim: self
                .extractor
                .output_dim(self.real.first().map_or(0, |s| s.len())),
            extractor: self.extractor,
            param_names: self.space.names().iter().map(|s| s.to_string()).collect(),
        }
    }

    fn config_for(&self, theta: &[f64], seed: u64) -> Result<SimConfig> {
        let mut config = self.base.clone();
        for (def, &value) in self.space.defs().iter().zip(theta) {
            config.apply_param(&def.name, value)?;
        }
        config.seed = seed;
        Ok(config)
    }

    /// Run `n_sim` independent replications at theta with the given seed
    /// block and compare against the reference set.
    pub fn evaluate_theta(&self, theta: &[f64], seed_block: &[u64]) -> Result<EligibilityRecord> {
        debug_assert_eq!(seed_block.len(), self.n_sim);
        let samples: Result<Vec<SeriesSample>> = seed_block
            .par_iter()
            .map(|&seed| {
                let config = self.config_for(theta, seed)?;
                run_simulation(&config).map_err(|e| Error::Simulation {
                    theta: theta.to_vec(),
                    source: Box::new(e),
                })
            })
            .collect();
        let samples = samples?;
        let ks = ks_distance(self.real, &samples, self.extractor, self.alpha)?;
        Ok(EligibilityRecord {
            theta: theta.to_vec(),
            ks,
            n_sim: self.n_sim,
            seed_block: seed_block.to_vec(),
        })
    }
}

/// Evaluate every grid point; return the eligible subset plus the complete
/// (theta, statistic) table for heatmap export.
pub fn grid_scan(
    ctx: &EvalContext,
    grid: &[Vec<f64>],
    master_seed: u64,
) -> Result<(EligibilitySet, Vec<EligibilityRecord>)> {
    if grid.is_empty() {
        return Err(Error::Input("grid must be non-empty".into()));
    }
    let records: Result<Vec<EligibilityRecord>> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, theta)| {
            let block: Vec<u64> = (0..ctx.n_sim as u64)
                .map(|rep| seeds::derive(master_seed, seeds::STREAM_SIM + idx as u64, rep))
                .collect();
            ctx.evaluate_theta(theta, &block)
        })
        .collect();
    let records = records?;
    let eligible = EligibilitySet {
        records: records.iter().filter(|r| r.ks.eligible).cloned().collect(),
        meta: ctx.meta(),
    };
    Ok((eligible, records))
}

/// Filter eligible entries out of an optimization evaluation log,
/// deduplicating identical thetas and keeping the best statistic.
pub fn collect_from_records<'r>(
    entries: impl IntoIterator<Item = (&'r [f64], &'r KsResult)>,
    meta: EligibilityMeta,
    n_sim: usize,
) -> EligibilitySet {
    let mut records: Vec<EligibilityRecord> = Vec::new();
    for (theta, ks) in entries {
        if !ks.eligible {
            continue;
        }
        match records.iter_mut().find(|r| r.theta == theta) {
            Some(existing) => {
                if ks.statistic < existing.ks.statistic {
                    existing.ks = ks.clone();
                }
            }
            None => records.push(EligibilityRecord {
                theta: theta.to_vec(),
                ks: ks.clone(),
                n_sim,
                seed_block: Vec::new(),
            }),
        }
    }
    EligibilitySet {
        records,
        meta,
    }
}

/// Heatmap-style CSV: one row per theta, parameter columns first, then
/// `ks_stat` and `eligible`.
pub fn write_records_csv(
    path: &Path,
    param_names: &[String],
    records: &[EligibilityRecord],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},ks_stat,eligible", param_names.join(","))?;
    for r in records {
        let params: Vec<String> = r.theta.iter().map(|v| format!("{v}")).collect();
        writeln!(
            w,
            "{},{},{}",
            params.join(","),
            r.ks.statistic,
            r.ks.eligible
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ksdist::KsResult;

    fn ks(stat: f64, q: f64) -> KsResult {
        KsResult {
            statistic: stat,
            per_dim: vec![stat],
            argmax_dim: 0,
            critical_value: q,
            eligible: stat < q,
        }
    }

    fn meta() -> EligibilityMeta {
        EligibilityMeta {
            alpha: 0.05,
            n_real: 10,
            n_sim: 5,
            feature_dim: 1,
            extractor: FeatureExtractor::Identity,
            param_names: vec!["num_noise".into()],
        }
    }

    #[test]
    fn empty_trace_gives_empty_set() {
        let set = collect_from_records(std::iter::empty(), meta(), 5);
        assert!(set.records.is_empty());
    }

    #[test]
    fn single_eligible_entry_gives_singleton() {
        let theta = vec![100.0];
        let a = ks(0.2, 0.3);
        let b = ks(0.5, 0.3);
        let entries = vec![(theta.as_slice(), &a), (theta.as_slice(), &b)];
        let set = collect_from_records(entries, meta(), 5);
        assert_eq!(set.records.len(), 1);
        assert_eq!(set.records[0].ks.statistic, 0.2);
    }

    #[test]
    fn dedup_keeps_minimum_statistic() {
        let theta = vec![100.0];
        let a = ks(0.25, 0.3);
        let b = ks(0.15, 0.3);
        let entries = vec![(theta.as_slice(), &a), (theta.as_slice(), &b)];
        let set = collect_from_records(entries, meta(), 5);
        assert_eq!(set.records.len(), 1);
        assert_eq!(set.records[0].ks.statistic, 0.15);
    }

    #[test]
    fn strict_threshold_membership() {
        let at_boundary = KsResult {
            statistic: 0.3,
            per_dim: vec![0.3],
            argmax_dim: 0,
            critical_value: 0.3,
            eligible: false,
        };
        let theta = vec![1.0];
        let entries = vec![(theta.as_slice(), &at_boundary)];
        let set = collect_from_records(entries, meta(), 5);
        assert!(set.records.is_empty());
    }
}
