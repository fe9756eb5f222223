//! Monte Carlo experiment driver: replicated sampling and estimation,
//! aggregation against the oracle, and plot-ready exports.
//!
//! Replicate `r` draws its sample from an independent stream seeded by
//! `derive_seed(seed, r)`, so results are a pure function of the config and
//! identical for any worker count. Replicates run concurrently and are
//! collected in index order; a failed replicate aborts the run with its
//! index rather than being silently dropped or resampled.

use crate::config::{ExperimentConfig, Parallelism};
use crate::estimators::{hat_estimate, EstimateResult};
use crate::kde::DegenerateClass;
use crate::model::{derive_seed, MixedPairModel};
use crate::numeric::{mean, pearson, sample_sd};
use crate::oracle::{mutual_information, OracleError, OracleResult};
use crate::quad::QuadratureSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt;
use std::fmt::Write as _;

/// Aggregate statistics of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub mean_estimate: f64,
    /// Unbiased sample standard deviation over replicates (divisor M-1);
    /// reported as 0 with a flag for a single replicate.
    pub sample_sd: f64,
    pub oracle_mi: f64,
    /// sqrt(var_clt / n): the spread the limit law predicts for one estimate.
    pub asymptotic_sd: f64,
    /// Correlation of ordered estimates with standard normal quantiles;
    /// `None` (with a flag) when undefined or fewer than 10 replicates.
    pub qq_correlation: Option<f64>,
    pub zero_density_hits: u64,
    pub condition_flags: Vec<String>,
}

/// Experiment failures.
#[derive(Debug)]
pub enum HarnessError {
    Config(crate::config::ConfigError),
    Oracle(OracleError),
    Replicate {
        index: usize,
        source: DegenerateClass,
    },
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Oracle(e) => write!(f, "{e}"),
            HarnessError::Replicate { index, source } => {
                write!(f, "replicate {index} failed: {source}")
            }
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<crate::config::ConfigError> for HarnessError {
    fn from(e: crate::config::ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<OracleError> for HarnessError {
    fn from(e: OracleError) -> Self {
        HarnessError::Oracle(e)
    }
}

/// Run the configured experiment: M replicates of sample-then-estimate plus
/// an oracle computation, summarized together.
pub fn run_experiment(
    config: &ExperimentConfig,
) -> Result<(Vec<EstimateResult>, ExperimentSummary), HarnessError> {
    config.validate()?;
    let model = config.build_model()?;
    let kernel = config.build_kernel();
    let oracle = mutual_information(&model, &QuadratureSpec::default())?;

    let replicate = |r: usize| -> Result<EstimateResult, HarnessError> {
        let sample = model.sample(config.n, derive_seed(config.seed, r as u64));
        hat_estimate(&sample, &kernel, &config.bandwidth)
            .map_err(|source| HarnessError::Replicate { index: r, source })
    };

    let results: Result<Vec<EstimateResult>, HarnessError> = match config.parallelism {
        Parallelism::Auto => (0..config.m_reps).into_par_iter().map(replicate).collect(),
        Parallelism::Fixed(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("building a local thread pool cannot fail");
            pool.install(|| (0..config.m_reps).into_par_iter().map(replicate).collect())
        }
    };
    let results = results?;

    let estimates: Vec<f64> = results.iter().map(|r| r.mi_hat).collect();
    let mut summary = summarize(&estimates, &oracle, config.n);
    summary.zero_density_hits = results.iter().map(|r| r.zero_density_hits).sum();
    summary
        .condition_flags
        .extend(model_condition_flags(&model));
    if let crate::kde::Bandwidth::Power { exponent, .. } = config.bandwidth {
        // The limit law asks for h shrinking faster than n^(-1/8).
        if exponent >= -0.125 {
            summary
                .condition_flags
                .push(format!("bandwidth exponent {exponent} not below -1/8"));
        }
    }
    Ok((results, summary))
}

/// Aggregate replicate estimates against the oracle.
pub fn summarize(estimates: &[f64], oracle: &OracleResult, n: usize) -> ExperimentSummary {
    assert!(
        !estimates.is_empty(),
        "summarize needs at least one estimate"
    );
    let m = estimates.len();
    let mut flags = Vec::new();
    let sample_sd = if m == 1 {
        flags.push("single replicate: sample sd reported as 0".to_string());
        0.0
    } else {
        sample_sd(estimates)
    };
    let qq_correlation = if m >= 10 {
        let r = qq_correlation(estimates);
        if r.is_none() {
            flags.push("qq correlation undefined: constant estimates".to_string());
        }
        r
    } else {
        flags.push("qq correlation skipped: fewer than 10 replicates".to_string());
        None
    };
    ExperimentSummary {
        mean_estimate: mean(estimates),
        sample_sd,
        oracle_mi: oracle.mi,
        asymptotic_sd: (oracle.var_clt.max(0.0) / n as f64).sqrt(),
        qq_correlation,
        zero_density_hits: 0,
        condition_flags: flags,
    }
}

/// Tail-index conditions per dimension for the estimator's limit law.
fn tail_index_threshold(dim: usize) -> Option<f64> {
    match dim {
        1 => Some(7.0 / 3.0),
        2 => Some(6.0),
        3 => Some(15.0),
        _ => None,
    }
}

/// Flags for model parameters outside the limit theorem's hypotheses.
pub fn model_condition_flags(model: &MixedPairModel) -> Vec<String> {
    let mut flags = Vec::new();
    if let Some(threshold) = tail_index_threshold(model.dim()) {
        for (i, c) in model.conditionals().iter().enumerate() {
            let idx = c.tail_index();
            if idx <= threshold {
                flags.push(format!(
                    "tail index violation: class {i} has index {idx:.4} <= {threshold:.4} (d={})",
                    model.dim()
                ));
            }
        }
    }
    flags
}

/// Pearson correlation of ordered estimates vs standard normal quantiles.
fn qq_correlation(estimates: &[f64]) -> Option<f64> {
    let pairs = qq_data(estimates);
    let theo: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ordered: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    pearson(&theo, &ordered)
}

/// Ordered estimates paired with standard normal quantiles at (k - 0.5) / M.
pub fn qq_data(estimates: &[f64]) -> Vec<(f64, f64)> {
    assert!(estimates.len() >= 2, "qq_data needs at least two estimates");
    let m = estimates.len();
    let normal = Normal::standard();
    let mut ordered = estimates.to_vec();
    ordered.sort_by(f64::total_cmp);
    ordered
        .into_iter()
        .enumerate()
        .map(|(k, x)| (normal.inverse_cdf((k as f64 + 0.5) / m as f64), x))
        .collect()
}

/// Equal-width histogram over [min, max]; counts sum to the input length.
/// A zero-width range collapses to a single bin.
pub fn hist_data(estimates: &[f64], bins: usize) -> Vec<(f64, f64, u64)> {
    assert!(bins >= 1, "hist_data needs at least one bin");
    assert!(!estimates.is_empty(), "hist_data needs data");
    let lo = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![(lo, hi, estimates.len() as u64)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in estimates {
        let idx = (((x - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

/// Default bin count: Sturges' rule.
pub fn sturges_bins(m: usize) -> usize {
    ((m.max(1) as f64).log2().ceil() as usize) + 1
}

/// estimates.csv: one row per replicate with the estimate and its components.
/// Float fields use the shortest round-trip decimal form, so output is
/// byte-stable across runs and worker counts.
pub fn render_estimates_csv(results: &[EstimateResult]) -> String {
    let classes = results.first().map_or(0, |r| r.class_terms.len());
    let mut out = String::from("replicate,mi_hat,h_hat");
    for i in 0..classes {
        let _ = write!(out, ",i_hat_{i}");
    }
    out.push('\n');
    for (r, res) in results.iter().enumerate() {
        let _ = write!(out, "{r},{},{}", res.mi_hat, res.h_hat);
        for t in &res.class_terms {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
    }
    out
}

/// qq.csv: theoretical standard normal quantile and ordered estimate.
pub fn render_qq_csv(estimates: &[f64]) -> String {
    let mut out = String::from("theoretical_quantile,ordered_estimate\n");
    for (q, x) in qq_data(estimates) {
        let _ = writeln!(out, "{q},{x}");
    }
    out
}

/// hist.csv: bin edges and counts.
pub fn render_hist_csv(estimates: &[f64], bins: usize) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for (l, r, c) in hist_data(estimates, bins) {
        let _ = writeln!(out, "{l},{r},{c}");
    }
    out
}
