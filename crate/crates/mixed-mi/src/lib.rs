//! Mutual information estimation between a discrete label and a continuous
//! variable, from labelled i.i.d. samples.
//!
//! The crate has three layers:
//!
//! * [`model`] / [`kde`] / [`estimators`] — mixed-pair generative models with
//!   exact densities and seeded sampling, heavy-tailed kernels, and the
//!   leave-one-out kernel MI estimator (plus a density-known plug-in variant
//!   used as a test instrument).
//! * [`quad`] / [`oracle`] — adaptive quadrature and ground truth: entropies,
//!   MI, and the asymptotic variance of the estimator, with error estimates.
//! * [`harness`] / [`config`] / [`repro`] — a reproducible Monte Carlo driver
//!   that runs replicated estimates, compares them against the oracle, and
//!   emits plot-ready data; experiment configs are JSON.
//!
//! Estimates are deterministic functions of `(config, seed)` regardless of
//! worker count, so simulation outputs are byte-reproducible.

pub mod config;
pub mod estimators;
pub mod harness;
pub mod kde;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod quad;
pub mod repro;

pub use config::{ExperimentConfig, Parallelism};
pub use estimators::{bar_estimate, combine, hat_estimate, p_hat, EstimateResult};
pub use harness::{hist_data, qq_data, run_experiment, summarize, ExperimentSummary, HarnessError};
pub use kde::{loo_conditional, loo_marginal, Bandwidth, DegenerateClass, KernelSpec};
pub use model::{derive_seed, ContinuousDensity, MixedPairModel, ModelError, Sample};
pub use oracle::{
    check_good_pair, clt_variance, entropy, mixed_pair_entropy, mutual_information, OracleError,
    OracleResult,
};
pub use quad::{integrate, Domain, QuadError, Quadrature, QuadratureSpec};
