//! Output series extraction and CSV persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::simulator::{SimConfig, Trade};
use crate::{Error, Result};

/// One simulated output series: per-bucket mid-price log returns followed by
/// per-bucket traded volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSample {
    pub returns: Vec<f64>,
    pub volumes: Vec<f64>,
}

impl SeriesSample {
    pub fn num_buckets(&self) -> usize {
        debug_assert_eq!(self.returns.len(), self.volumes.len());
        self.returns.len()
    }

    pub fn len(&self) -> usize {
        self.returns.len() + self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Concatenated layout: all returns, then all volumes.
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.returns);
        v.extend_from_slice(&self.volumes);
        v
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 {
            return Err(Error::Input("series length must be even (2B)".into()));
        }
        let b = values.len() / 2;
        Ok(SeriesSample {
            returns: values[..b].to_vec(),
            volumes: values[b..].to_vec(),
        })
    }
}

/// A collection of series samples sharing a generating configuration.
pub type SampleSet = Vec<SeriesSample>;

/// Build the output series from the trade log and mid-price history.
///
/// Per bucket: volume is the sum of trade sizes with timestamps in the bucket;
/// the return is the log mid change across the bucket. Mids carry forward from
/// the last quote change at or before each bucket boundary, falling back to
/// `r_bar` before the first quote.
pub fn extract_series(
    trade_log: &[Trade],
    mid_history: &[(u64, f64)],
    config: &SimConfig,
) -> SeriesSample {
    let b = config.num_buckets();
    let dt = config.sampling_interval;
    let start = config.series_start;

    let mut volumes = vec![0.0; b];
    for trade in trade_log {
        if trade.time >= start && trade.time < start + b as u64 * dt {
            let idx = ((trade.time - start) / dt) as usize;
            volumes[idx] += trade.size as f64;
        }
    }

    // mid_history is time-ordered; walk it once across bucket boundaries.
    debug_assert!(mid_history.windows(2).all(|w| w[0].0 <= w[1].0));
    let mut boundary_mids = Vec::with_capacity(b + 1);
    let mut last = config.r_bar;
    let mut i = 0;
    for k in 0..=b {
        let t = start + k as u64 * dt;
        while i < mid_history.len() && mid_history[i].0 <= t {
            last = mid_history[i].1;
            i += 1;
        }
        boundary_mids.push(last);
    }

    let returns = boundary_mids
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();

    SeriesSample { returns, volumes }
}

/// Write a sample set as CSV: header `r_0,...,r_{B-1},v_0,...,v_{B-1}`, one
/// row per sample.
pub fn write_samples_csv(path: &Path, samples: &[SeriesSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let b = samples.first().map_or(0, |s| s.num_buckets());
    let header: Vec<String> = (0..b)
        .map(|i| format!("r_{i}"))
        .chain((0..b).map(|i| format!("v_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let row: Vec<String> = s.values().iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<SampleSet> {
    let reader = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let values = values.map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        samples.push(SeriesSample::from_values(&values)?);
    }
    Ok(samples)
}
