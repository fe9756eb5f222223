//! Packaged reference experiments: six mixture cases with published target
//! values, in full-scale form (N = 50,000) and desk-scale variants
//! (n = 10,000, 100 replicates) that finish in minutes.

use crate::config::{
    DensityConfig, ExperimentConfig, KernelConfig, ModelConfig, OutputKind, Parallelism,
};
use crate::kde::Bandwidth;

/// Reference values a case is expected to reproduce (at full scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expected {
    /// Ground-truth mutual information.
    pub mi: f64,
    /// Asymptotic variance of the estimator, where published directly.
    pub var_clt: Option<f64>,
    /// sqrt(var_clt / N) at N = 50,000.
    pub asymptotic_sd: f64,
    /// Published mean of the replicate estimates.
    pub mean_estimate: f64,
    /// Published sample standard deviation of the replicate estimates.
    pub sample_sd: f64,
}

/// One shipped reference case.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproCase {
    pub id: &'static str,
    pub config: ExperimentConfig,
    pub expected: Expected,
}

fn student_t(nu: f64, mu: f64) -> DensityConfig {
    DensityConfig::StudentT { nu, mu, sigma: 1.0 }
}

fn mvt_iso(nu: f64, s2: f64) -> DensityConfig {
    DensityConfig::Mvt {
        nu,
        mu: vec![0.0, 0.0],
        shape: vec![vec![s2, 0.0], vec![0.0, s2]],
    }
}

fn config(
    label: &str,
    dim: usize,
    conditionals: Vec<DensityConfig>,
    n: usize,
    m_reps: usize,
    bandwidth_scale: f64,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        label: Some(label.to_string()),
        model: ModelConfig {
            dim,
            probs: vec![0.3, 0.7],
            conditionals,
        },
        n,
        m_reps,
        kernel: KernelConfig::StudentT { nu: 3.0 },
        bandwidth: Bandwidth::Power {
            exponent: -0.2,
            scale: bandwidth_scale,
        },
        seed,
        parallelism: Parallelism::Auto,
        outputs: vec![
            OutputKind::EstimatesCsv,
            OutputKind::SummaryJson,
            OutputKind::HistCsv,
            OutputKind::QqCsv,
        ],
    }
}

struct CaseDef {
    id: &'static str,
    dim: usize,
    conditionals: fn() -> Vec<DensityConfig>,
    full_m: usize,
    bandwidth_scale: f64,
    seed: u64,
    expected: Expected,
}

const FULL_N: usize = 50_000;

fn case_defs() -> Vec<CaseDef> {
    vec![
        CaseDef {
            id: "t3-t12",
            dim: 1,
            conditionals: || vec![student_t(3.0, 0.0), student_t(12.0, 0.0)],
            full_m: 400,
            bandwidth_scale: 1.0,
            seed: 101,
            expected: Expected {
                mi: 0.011819,
                var_clt: Some(0.02189236),
                asymptotic_sd: 0.0006617,
                mean_estimate: 0.01167391,
                sample_sd: 0.0006616724,
            },
        },
        CaseDef {
            id: "t3-t3shift2",
            dim: 1,
            conditionals: || vec![student_t(3.0, 0.0), student_t(3.0, 2.0)],
            full_m: 400,
            bandwidth_scale: 1.0,
            seed: 102,
            expected: Expected {
                mi: 0.20023,
                var_clt: Some(0.3092179),
                asymptotic_sd: 0.0025,
                mean_estimate: 0.1991132,
                sample_sd: 0.002345997,
            },
        },
        CaseDef {
            id: "t3-t3scale3",
            dim: 1,
            conditionals: || {
                vec![
                    student_t(3.0, 0.0),
                    DensityConfig::StudentT {
                        nu: 3.0,
                        mu: 0.0,
                        sigma: 3.0,
                    },
                ]
            },
            full_m: 400,
            bandwidth_scale: 1.0,
            seed: 103,
            expected: Expected {
                mi: 0.102063,
                var_clt: Some(0.1540501),
                asymptotic_sd: 0.0018,
                mean_estimate: 0.1014199,
                sample_sd: 0.001819982,
            },
        },
        CaseDef {
            id: "pareto2-pareto10",
            dim: 1,
            conditionals: || {
                vec![
                    DensityConfig::Pareto {
                        x_m: 1.0,
                        alpha: 2.0,
                    },
                    DensityConfig::Pareto {
                        x_m: 1.0,
                        alpha: 10.0,
                    },
                ]
            },
            full_m: 400,
            // The two Pareto components pile up just above x_m = 1; a much
            // smaller bandwidth resolves that region.
            bandwidth_scale: 1.0 / 24.0,
            seed: 104,
            expected: Expected {
                mi: 0.201123,
                var_clt: Some(0.2748102),
                asymptotic_sd: 0.0023,
                mean_estimate: 0.2010447,
                sample_sd: 0.002349275,
            },
        },
        CaseDef {
            id: "mvt5-mvt25",
            dim: 2,
            conditionals: || vec![mvt_iso(5.0, 1.0), mvt_iso(25.0, 1.0)],
            full_m: 200,
            bandwidth_scale: 1.0,
            seed: 105,
            expected: Expected {
                mi: 0.01158,
                var_clt: None,
                asymptotic_sd: 0.0006577826,
                mean_estimate: 0.0112381,
                sample_sd: 0.0008356947,
            },
        },
        CaseDef {
            id: "mvt5-mvt5scale3",
            dim: 2,
            // Scale 3 per coordinate: shape matrix 9 I.
            conditionals: || vec![mvt_iso(5.0, 1.0), mvt_iso(5.0, 9.0)],
            full_m: 200,
            bandwidth_scale: 1.0,
            seed: 106,
            expected: Expected {
                mi: 0.202516,
                var_clt: None,
                asymptotic_sd: 0.002312909,
                mean_estimate: 0.2022715,
                sample_sd: 0.002315134,
            },
        },
    ]
}

/// The six full-scale reference cases (N = 50,000; M = 400 for d=1,
/// M = 200 for d=2; h = N^(-1/5), scaled by 1/24 for the Pareto case).
pub fn list_cases() -> Vec<ReproCase> {
    case_defs()
        .into_iter()
        .map(|d| ReproCase {
            id: d.id,
            config: config(
                d.id,
                d.dim,
                (d.conditionals)(),
                FULL_N,
                d.full_m,
                d.bandwidth_scale,
                d.seed,
            ),
            expected: d.expected,
        })
        .collect()
}

/// Desk-scale variants of the same cases: n = 10,000 and 100 replicates,
/// sized so the whole set runs in minutes.
pub fn desk_cases() -> Vec<ReproCase> {
    case_defs()
        .into_iter()
        .map(|d| ReproCase {
            id: d.id,
            config: config(
                d.id,
                d.dim,
                (d.conditionals)(),
                10_000,
                100,
                d.bandwidth_scale,
                d.seed + 100,
            ),
            expected: d.expected,
        })
        .collect()
}

/// Look up a case by id in a case list.
pub fn find_case<'a>(cases: &'a [ReproCase], id: &str) -> Option<&'a ReproCase> {
    cases.iter().find(|c| c.id == id)
}
