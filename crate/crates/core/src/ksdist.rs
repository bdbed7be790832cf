//! High-dimensional two-sample K-S statistic with Bonferroni correction.
//!
//! Each feature dimension is compared with the exact one-dimensional
//! two-sample K-S statistic; the high-dimensional statistic is the max over
//! dimensions, tested against the critical value at level `alpha / K`.

use crate::simulator::SeriesSample;
use crate::{Error, Result};

/// Deterministic map from a raw output series to the feature vector compared
/// dimension-wise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureExtractor {
    /// No extraction: K = O.
    Identity,
    /// Four stylized-fact statistics: lag-1 return autocorrelation, return
    /// kurtosis, squared-return lag-1 autocorrelation, volume-|return|
    /// correlation.
    StylizedFacts,
}

impl FeatureExtractor {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(FeatureExtractor::Identity),
            "stylized" | "stylized-facts" => Ok(FeatureExtractor::StylizedFacts),
            other => Err(Error::Config(format!(
                "unknown feature extractor: {other} (expected identity or stylized-facts)"
            ))),
        }
    }

    pub fn apply(&self, sample: &SeriesSample) -> Vec<f64> {
        match self {
            FeatureExtractor::Identity => sample.values(),
            FeatureExtractor::StylizedFacts => {
                stylized_features(&sample.returns, &sample.volumes).to_vec()
            }
        }
    }

    pub fn output_dim(&self, series_len: usize) -> usize {
        match self {
            FeatureExtractor::Identity => series_len,
            FeatureExtractor::StylizedFacts => 4,
        }
    }
}

/// Result of one high-dimensional K-S comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct KsResult {
    /// Max over dimensions of the per-dimension sup-CDF-gap.
    pub statistic: f64,
    pub per_dim: Vec<f64>,
    pub argmax_dim: usize,
    pub critical_value: f64,
    /// Strict-inequality membership: `statistic < critical_value`.
    pub eligible: bool,
}

/// Exact one-dimensional two-sample K-S statistic.
///
/// The sup of the absolute empirical-CDF difference is attained at a pooled
/// sample point, so a merged sorted sweep with simultaneous increments on ties
/// evaluates it exactly.
pub fn one_dim_ks(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Input("K-S test requires non-empty samples".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::Input("K-S test input contains NaN".into()));
    }
    let mut xs: Vec<f64> = xs.to_vec();
    let mut ys: Vec<f64> = ys.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let (n_x, n_y) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < xs.len() || j < ys.len() {
        // Step to the next pooled point, consuming ties on both sides.
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == t {
            i += 1;
        }
        while j < ys.len() && ys[j] == t {
            j += 1;
        }
        let gap = (i as f64 / n_x - j as f64 / n_y).abs();
        sup = sup.max(gap);
    }
    Ok(sup)
}

/// Bonferroni-corrected critical value for the K-dimensional statistic:
/// `q = sqrt(-(N+n) ln(alpha/2K) / (2 N n))`.
pub fn critical_value(n_real: usize, n_sim: usize, alpha: f64, k: usize) -> Result<f64> {
    if n_real == 0 || n_sim == 0 {
        return Err(Error::Input("sample counts must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Input("alpha must lie in (0,1)".into()));
    }
    if k == 0 {
        return Err(Error::Input("dimension count must be positive".into()));
    }
    let ratio = alpha / (2.0 * k as f64);
    if ratio >= 1.0 {
        return Err(Error::Input("alpha/2K must be below 1".into()));
    }
    let (nn, mm) = (n_real as f64, n_sim as f64);
    Ok((-(nn + mm) * ratio.ln() / (2.0 * nn * mm)).sqrt())
}

/// High-dimensional K-S distance between two sample sets after feature
/// extraction.
pub fn ks_distance(
    real: &[SeriesSample],
    sim: &[SeriesSample],
    extractor: FeatureExtractor,
    alpha: f64,
) -> Result<KsResult> {
    if real.is_empty() || sim.is_empty() {
        return Err(Error::Input("K-S distance requires non-empty sets".into()));
    }
    let len = real[0].len();
    if real
        .iter()
        .chain(sim.iter())
        .any(|s| s.len() != len)
    {
        return Err(Error::Input("all series samples must share one length".into()));
    }

    let real_feats: Vec<Vec<f64>> = real.iter().map(|s| extractor.apply(s)).collect();
    let sim_feats: Vec<Vec<f64>> = sim.iter().map(|s| extractor.apply(s)).collect();
    let k = real_feats[0].len();

    let mut per_dim = Vec::with_capacity(k);
    for dim in 0..k {
        let xs: Vec<f64> = real_feats.iter().map(|f| f[dim]).collect();
        let ys: Vec<f64> = sim_feats.iter().map(|f| f[dim]).collect();
        per_dim.push(one_dim_ks(&xs, &ys)?);
    }

    let (argmax_dim, &statistic) = per_dim
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("k >= 1");
    let q = critical_value(real.len(), sim.len(), alpha, k)?;
    Ok(KsResult {
        statistic,
        per_dim,
        argmax_dim,
        critical_value: q,
        eligible: statistic < q,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson correlation with the zero-variance convention: degenerate inputs
/// yield 0 rather than NaN.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Stylized-fact feature vector of a return/volume series pair.
///
/// Order: lag-1 autocorrelation of returns, kurtosis of returns (plain
/// `m4/m2^2`), lag-1 autocorrelation of squared returns, correlation of
/// volumes against absolute returns. Degenerate variances map to 0.
pub fn stylized_features(returns: &[f64], volumes: &[f64]) -> [f64; 4] {
    debug_assert!(returns.len() >= 3);
    let lag0 = &returns[..returns.len() - 1];
    let lag1 = &returns[1..];
    let autocorr = correlation(lag0, lag1);

    let m = mean(returns);
    let m2 = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / returns.len() as f64;
    let m4 = returns.iter().map(|r| (r - m).powi(4)).sum::<f64>() / returns.len() as f64;
    let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) } else { 0.0 };

    let sq: Vec<f64> = returns.iter().map(|r| r * r).collect();
    let vol_cluster = correlation(&sq[..sq.len() - 1], &sq[1..]);

    let abs_r: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    let vol_corr = correlation(volumes, &abs_r);

    [autocorr, kurtosis, vol_cluster, vol_corr]
}
