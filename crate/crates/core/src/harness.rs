//! Experiment orchestration: real-data generation, multi-seed strategy
//! comparisons and report assembly.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::eligibility::{collect_from_records, EligibilityMeta, EligibilitySet, EvalContext};
use crate::ksdist::{correlation, FeatureExtractor};
use crate::optimize::{strategy_by_name, strategy_names, Budget, Objective, Trace};
use crate::params::ParamSpace;
use crate::seeds;
use crate::simulator::{run_simulation, SampleSet, SimConfig};
use crate::{Error, Result};

/// Full description of one calibration experiment. A [`Report`] is a pure
/// function of this value.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Ground-truth configuration; free parameters are overwritten per theta.
    pub base: SimConfig,
    pub space: ParamSpace,
    pub n_real: usize,
    pub n_sim: usize,
    pub alpha: f64,
    pub strategies: Vec<String>,
    pub n_init: usize,
    pub n_total: usize,
    /// Per-cell seeds; each (strategy, seed) pair is one run.
    pub seeds: Vec<u64>,
    pub extractor: FeatureExtractor,
    pub master_seed: u64,
    /// Parameter pair for the non-identifiability scatter, when requested.
    pub nonident_pair: Option<(String, String)>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_real == 0 || self.n_sim == 0 {
            return Err(Error::Config("N_real and n_sim must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0,1)".into()));
        }
        if self.n_init > self.n_total || self.n_total == 0 {
            return Err(Error::Config("budgets require 0 < n_init <= n_total".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() || self.seeds.is_empty() {
            return Err(Error::Config("seed list must be non-empty and distinct".into()));
        }
        for s in &self.strategies {
            if strategy_by_name(s).is_none() {
                return Err(Error::Config(format!(
                    "unknown strategy {s}; valid names: {}",
                    strategy_names().join(", ")
                )));
            }
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy required".into()));
        }
        if let Some((a, b)) = &self.nonident_pair {
            for p in [a, b] {
                if self.space.index_of(p).is_none() {
                    return Err(Error::Config(format!(
                        "nonident_pair parameter {p} is not a free parameter"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ground-truth values of the free parameters.
    pub fn truth(&self) -> Result<Vec<f64>> {
        self.space
            .defs()
            .iter()
            .map(|d| truth_value(&self.base, &d.name))
            .collect()
    }
}

fn truth_value(config: &SimConfig, name: &str) -> Result<f64> {
    let v = match name {
        "num_value_1" => config.value[0].num as f64,
        "num_value_2" => config.value[1].num as f64,
        "num_value_3" => config.value[2].num as f64,
        "lambda_a_1" => config.value[0].lambda_a,
        "lambda_a_2" => config.value[1].lambda_a,
        "lambda_a_3" => config.value[2].lambda_a,
        "min_size_value_1" => config.value[0].min_size as f64,
        "min_size_value_2" => config.value[1].min_size as f64,
        "min_size_value_3" => config.value[2].min_size as f64,
        "max_size_value_1" => config.value[0].max_size as f64,
        "max_size_value_2" => config.value[1].max_size as f64,
        "max_size_value_3" => config.value[2].max_size as f64,
        "num_noise" => config.num_noise as f64,
        "min_size_noise" => config.min_size_noise as f64,
        "max_size_noise" => config.max_size_noise as f64,
        "r_bar" => config.r_bar,
        "kappa" => config.kappa,
        "fund_vol" => config.fund_vol,
        _ => return Err(Error::Config(format!("unknown parameter {name}"))),
    };
    Ok(v)
}

/// Generate the reference sample set at the ground truth with the reserved
/// seed block. Deterministic in the spec.
pub fn generate_real_data(spec: &ExperimentSpec) -> Result<SampleSet> {
    spec.validate()?;
    (0..spec.n_real as u64)
        .into_par_iter()
        .map(|i| {
            let mut config = spec.base.clone();
            config.seed = seeds::derive(spec.master_seed, seeds::STREAM_REAL, i);
            run_simulation(&config)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CellFailure {
    pub strategy: String,
    pub seed: u64,
    pub message: String,
}

/// Aggregated result of a multi-seed strategy comparison.
#[derive(Debug, Clone)]
pub struct Report {
    pub traces: Vec<Trace>,
    pub failures: Vec<CellFailure>,
    pub meta: EligibilityMeta,
    pub n_total: usize,
}

/// Run every (strategy, seed) cell of the comparison. Cells run in parallel;
/// a failed cell is recorded and excluded from aggregates.
pub fn run_comparison(spec: &ExperimentSpec, real: &SampleSet) -> Result<Report> {
    spec.validate()?;
    if real.len() != spec.n_real {
        return Err(Error::Input(format!(
            "reference set has {} samples, spec expects {}",
            real.len(),
            spec.n_real
        )));
    }
    let ctx = EvalContext {
        space: &spec.space,
        base: &spec.base,
        real,
        n_sim: spec.n_sim,
        alpha: spec.alpha,
        extractor: spec.extractor,
    };
    let meta = ctx.meta();
    let budget = Budget {
        n_init: spec.n_init,
        n_total: spec.n_total,
    };

    let cells: Vec<(String, u64)> = spec
        .strategies
        .iter()
        .flat_map(|s| spec.seeds.iter().map(move |&seed| (s.clone(), seed)))
        .collect();

    let results: Vec<std::result::Result<Trace, CellFailure>> = cells
        .par_iter()
        .map(|(name, cell_seed)| {
            let strategy = strategy_by_name(name).expect("validated");
            // Simulator seed stream depends on the cell seed only, so that
            // strategies share their initial evaluations under a shared seed.
            let mut objective = Objective::new(
                ctx.clone(),
                spec.master_seed,
                seeds::STREAM_SIM + cell_seed,
            );
            strategy
                .run(&mut objective, budget, *cell_seed)
                .map_err(|e| CellFailure {
                    strategy: name.clone(),
                    seed: *cell_seed,
                    message: e.to_string(),
                })
        })
        .collect();

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => traces.push(t),
            Err(f) => failures.push(f),
        }
    }
    Ok(Report {
        traces,
        failures,
        meta,
        n_total: spec.n_total,
    })
}

#[derive(Debug, Clone)]
pub struct SuccessRate {
    pub strategy: String,
    pub successes: usize,
    pub cells: usize,
    pub excluded: usize,
}

impl SuccessRate {
    pub fn rate(&self) -> f64 {
        if self.cells == 0 {
            f64::NAN
        } else {
            self.successes as f64 / self.cells as f64
        }
    }
}

impl Report {
    fn strategies(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.traces {
            if !out.contains(&t.strategy) {
                out.push(t.strategy.clone());
            }
        }
        for f in &self.failures {
            if !out.contains(&f.strategy) {
                out.push(f.strategy.clone());
            }
        }
        out
    }

    /// Success = an eligible point found within the budget.
    pub fn success_rates(&self) -> Vec<SuccessRate> {
        self.strategies()
            .into_iter()
            .map(|s| {
                let runs: Vec<&Trace> = self.traces.iter().filter(|t| t.strategy == s).collect();
                SuccessRate {
                    successes: runs.iter().filter(|t| t.found_eligible()).count(),
                    cells: runs.len(),
                    excluded: self.failures.iter().filter(|f| f.strategy == s).count(),
                    strategy: s,
                }
            })
            .collect()
    }

    /// Mean best-so-far curve per strategy (arithmetic mean at each index).
    pub fn mean_curves(&self) -> BTreeMap<String, Vec<f64>> {
        let mut out = BTreeMap::new();
        for s in self.strategies() {
            let runs: Vec<&Trace> = self.traces.iter().filter(|t| t.strategy == s).collect();
            if runs.is_empty() {
                continue;
            }
            let len = runs.iter().map(|t| t.best_so_far.len()).min().unwrap_or(0);
            let mut curve = vec![0.0; len];
            for t in &runs {
                for (i, v) in t.best_so_far[..len].iter().enumerate() {
                    curve[i] += v;
                }
            }
            for v in &mut curve {
                *v /= runs.len() as f64;
            }
            out.insert(s, curve);
        }
        out
    }

    pub fn mean_final_best(&self, strategy: &str) -> Option<f64> {
        let finals: Vec<f64> = self
            .traces
            .iter()
            .filter(|t| t.strategy == strategy)
            .filter_map(|t| t.final_best())
            .collect();
        if finals.is_empty() {
            None
        } else {
            Some(finals.iter().sum::<f64>() / finals.len() as f64)
        }
    }

    /// Eligible points pooled across every trace, deduplicated.
    pub fn eligibility_set(&self) -> EligibilitySet {
        let entries = self.traces.iter().flat_map(|t| {
            t.evaluations.iter().map(|e| {
                let ks = crate::ksdist::KsResult {
                    statistic: e.statistic,
                    per_dim: Vec::new(),
                    argmax_dim: 0,
                    critical_value: e.critical_value,
                    eligible: e.eligible,
                };
                (e.theta.clone(), ks)
            })
        });
        // collect into owned storage first; collect_from_records borrows
        let owned: Vec<(Vec<f64>, crate::ksdist::KsResult)> = entries.collect();
        collect_from_records(
            owned.iter().map(|(t, k)| (t.as_slice(), k)),
            self.meta.clone(),
            self.meta.n_sim,
        )
    }
}

/// Scatter and summary statistics for a suspected inversely-proportional
/// parameter pair over an eligibility set.
#[derive(Debug, Clone)]
pub struct NonIdentReport {
    pub param_a: String,
    pub param_b: String,
    pub pairs: Vec<(f64, f64)>,
    /// Pearson correlation of the logs; `None` below 2 usable points.
    pub log_log_corr: Option<f64>,
    /// Coefficient of variation of the product a*b.
    pub product_cv: Option<f64>,
}

pub fn nonidentifiability_report(
    es: &EligibilitySet,
    pair: (&str, &str),
) -> Result<NonIdentReport> {
    if es.records.is_empty() {
        return Err(Error::Input("eligibility set is empty".into()));
    }
    let ia = es
        .meta
        .param_names
        .iter()
        .position(|n| n == pair.0)
        .ok_or_else(|| Error::Input(format!("unknown parameter {}", pair.0)))?;
    let ib = es
        .meta
        .param_names
        .iter()
        .position(|n| n == pair.1)
        .ok_or_else(|| Error::Input(format!("unknown parameter {}", pair.1)))?;
    let pairs: Vec<(f64, f64)> = es
        .records
        .iter()
        .map(|r| (r.theta[ia], r.theta[ib]))
        .collect();
    let positive: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(a, b)| a > 0.0 && b > 0.0)
        .collect();
    let (log_log_corr, product_cv) = if positive.len() >= 2 {
        let la: Vec<f64> = positive.iter().map(|p| p.0.ln()).collect();
        let lb: Vec<f64> = positive.iter().map(|p| p.1.ln()).collect();
        let prod: Vec<f64> = positive.iter().map(|p| p.0 * p.1).collect();
        let pm = prod.iter().sum::<f64>() / prod.len() as f64;
        let pv = prod.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / prod.len() as f64;
        (
            Some(correlation(&la, &lb)),
            if pm != 0.0 { Some(pv.sqrt() / pm) } else { None },
        )
    } else {
        (None, None)
    };
    Ok(NonIdentReport {
        param_a: pair.0.to_string(),
        param_b: pair.1.to_string(),
        pairs,
        log_log_corr,
        product_cv,
    })
}

/// Flat key=value echo of a spec, sufficient to reproduce the run.
pub fn spec_echo(spec: &ExperimentSpec) -> String {
    let c = &spec.base;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    for (i, v) in c.value.iter().enumerate() {
        let k = i + 1;
        kv(&format!("num_value_{k}"), v.num.to_string());
        kv(&format!("lambda_a_{k}"), format!("{:e}", v.lambda_a));
        kv(&format!("min_size_value_{k}"), v.min_size.to_string());
        kv(&format!("max_size_value_{k}"), v.max_size.to_string());
    }
    kv("num_noise", c.num_noise.to_string());
    kv("min_size_noise", c.min_size_noise.to_string());
    kv("max_size_noise", c.max_size_noise.to_string());
    kv("r_bar", format!("{:e}", c.r_bar));
    kv("kappa", format!("{:e}", c.kappa));
    kv("fund_vol", format!("{:e}", c.fund_vol));
    kv("num_mm", c.num_mm.to_string());
    kv("mm_rate", c.mm_rate.to_string());
    kv("mm_half_spread", c.mm_half_spread.to_string());
    kv("mm_size", c.mm_size.to_string());
    kv("obs_noise_frac", format!("{:e}", c.obs_noise_frac));
    kv("session_open", c.session_open.to_string());
    kv("session_close", c.session_close.to_string());
    kv("series_start", c.series_start.to_string());
    kv("series_end", c.series_end.to_string());
    kv("sampling_interval", c.sampling_interval.to_string());
    kv("seed", spec.master_seed.to_string());
    kv("N_real", spec.n_real.to_string());
    kv("n_sim", spec.n_sim.to_string());
    kv("alpha", spec.alpha.to_string());
    kv("n_init", spec.n_init.to_string());
    kv("n_total", spec.n_total.to_string());
    kv("strategies", spec.strategies.join(","));
    kv(
        "free_params",
        spec.space.names().join(","),
    );
    for d in spec.space.defs() {
        kv(&format!("min_{}", d.name), format!("{:e}", d.lower));
        kv(&format!("max_{}", d.name), format!("{:e}", d.upper));
    }
    kv(
        "num_seeds",
        spec.seeds.len().to_string(),
    );
    kv(
        "extractor",
        match spec.extractor {
            FeatureExtractor::Identity => "identity".into(),
            FeatureExtractor::StylizedFacts => "stylized-facts".into(),
        },
    );
    if let Some((a, b)) = &spec.nonident_pair {
        kv("nonident_pair", format!("{a},{b}"));
    }
    out
}

/// Write the full report directory layout.
pub fn write_report_dir(dir: &Path, spec: &ExperimentSpec, report: &Report) -> Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    let names: Vec<String> = spec.space.names().iter().map(|s| s.to_string()).collect();

    for t in &report.traces {
        let path = dir.join("traces").join(format!("{}_{}.csv", t.strategy, t.seed));
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "eval_idx,{},ks_stat,eligible,best_so_far", names.join(","))?;
        for (e, best) in t.evaluations.iter().zip(&t.best_so_far) {
            let params: Vec<String> = e.theta.iter().map(|v| format!("{v}")).collect();
            writeln!(
                w,
                "{},{},{},{},{}",
                e.index,
                params.join(","),
                e.statistic,
                e.eligible,
                best
            )?;
        }
    }

    let curves = report.mean_curves();
    {
        let mut w = BufWriter::new(File::create(dir.join("curve_mean.csv"))?);
        let cols: Vec<&String> = curves.keys().collect();
        writeln!(
            w,
            "eval_idx,{}",
            cols.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
        )?;
        let len = curves.values().map(|c| c.len()).min().unwrap_or(0);
        for i in 0..len {
            let row: Vec<String> = cols.iter().map(|s| format!("{}", curves[*s][i])).collect();
            writeln!(w, "{},{}", i, row.join(","))?;
        }
    }

    {
        let mut w = BufWriter::new(File::create(dir.join("final_best.csv"))?);
        writeln!(w, "strategy,seed,final_best,found_eligible")?;
        for t in &report.traces {
            writeln!(
                w,
                "{},{},{},{}",
                t.strategy,
                t.seed,
                t.final_best().unwrap_or(f64::NAN),
                t.found_eligible()
            )?;
        }
    }

    {
        let mut w = BufWriter::new(File::create(dir.join("success_rate.csv"))?);
        writeln!(w, "strategy,successes,cells,excluded,rate")?;
        for r in report.success_rates() {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.strategy,
                r.successes,
                r.cells,
                r.excluded,
                r.rate()
            )?;
        }
    }

    let es = report.eligibility_set();
    crate::eligibility::write_records_csv(&dir.join("eligible.csv"), &names, &es.records)?;

    if let Some((a, b)) = &spec.nonident_pair {
        if !es.records.is_empty() {
            let ni = nonidentifiability_report(&es, (a, b))?;
            let mut w = BufWriter::new(File::create(dir.join(format!("nonident_{a}_{b}.csv")))?);
            writeln!(w, "{a},{b}")?;
            for (x, y) in &ni.pairs {
                writeln!(w, "{x},{y}")?;
            }
        }
    }

    fs::write(dir.join("manifest"), spec_echo(spec))?;
    Ok(())
}
