//! Mutual information estimators for labelled continuous samples.
//!
//! Two estimators share one result type: `bar_estimate` plugs the true model
//! densities into the empirical means (a test instrument, exact in
//! expectation), while `hat_estimate` is the practical kernel version built
//! on leave-one-out density estimates.
//!
//! Both canonicalize the observation order first and reduce with pairwise
//! summation in fixed index order, so results are bit-identical across input
//! permutations and across internal thread counts.

use crate::kde::{Bandwidth, DegenerateClass, KernelSpec};
use crate::model::{MixedPairModel, Sample};
use crate::numeric::pairwise_sum;
use rayon::prelude::*;
use serde::Serialize;

/// One estimate with its components and diagnostics.
///
/// `mi_hat` is constructed as `h_hat - sum(class_terms)` (exactly, same float
/// operations as [`combine`]). `p_hat` holds empirical class frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub mi_hat: f64,
    pub h_hat: f64,
    pub class_terms: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub n: usize,
    /// Resolved bandwidth for the kernel estimator; `None` for the plug-in
    /// instrument, which smooths nothing.
    pub bandwidth_used: Option<f64>,
    /// Sample points that hit a zero true density (possible only on
    /// measure-zero sets or support mismatches; such points contribute
    /// `log 0 = 0`).
    pub zero_density_hits: u64,
}

/// Empirical class frequencies for labels 0..=m.
pub fn p_hat(sample: &Sample, m: usize) -> Vec<f64> {
    assert!(
        sample.max_label() <= m,
        "label {} exceeds requested maximum {m}",
        sample.max_label()
    );
    let mut counts = vec![0usize; m + 1];
    for &l in sample.labels() {
        counts[l] += 1;
    }
    let n = sample.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Combine an entropy estimate and per-class terms into the MI estimate.
pub fn combine(h_hat: f64, class_terms: &[f64]) -> f64 {
    h_hat - pairwise_sum(class_terms)
}

/// Plug-in estimate using the true model densities inside the logs.
///
/// Per-class terms are `-mean(log f_i(Y_k))` over the points of class `i`;
/// the entropy term is `-mean(log f(Y_k))` under the marginal. Zero-density
/// points contribute 0 (the `log 0 = 0` convention) and are counted in the
/// diagnostics.
pub fn bar_estimate(sample: &Sample, model: &MixedPairModel) -> EstimateResult {
    assert_eq!(sample.dim(), model.dim(), "sample/model dimension mismatch");
    assert!(
        sample.max_label() < model.n_classes(),
        "sample label {} exceeds model classes {}",
        sample.max_label(),
        model.n_classes()
    );
    let s = sample.canonicalized();
    let n = s.len();
    let classes = model.n_classes();

    let mut zero_hits = 0u64;
    let mut marg_terms = Vec::with_capacity(n);
    let mut cond_terms: Vec<Vec<f64>> = vec![Vec::new(); classes];
    for k in 0..n {
        let y = s.point(k);
        marg_terms.push(match model.marginal_log_pdf(y) {
            Some(l) => l,
            None => {
                zero_hits += 1;
                0.0
            }
        });
        let lab = s.label(k);
        cond_terms[lab].push(match model.conditionals()[lab].log_pdf(y) {
            Some(l) => l,
            None => {
                zero_hits += 1;
                0.0
            }
        });
    }

    let h_hat = -pairwise_sum(&marg_terms) / n as f64;
    let class_terms: Vec<f64> = cond_terms
        .iter()
        .map(|terms| -pairwise_sum(terms) / n as f64)
        .collect();
    EstimateResult {
        mi_hat: combine(h_hat, &class_terms),
        h_hat,
        p_hat: p_hat(&s, classes - 1),
        class_terms,
        n,
        bandwidth_used: None,
        zero_density_hits: zero_hits,
    }
}

/// Kernel estimate from the sample alone.
///
/// For each observation the leave-one-out marginal and own-class conditional
/// densities are evaluated at that observation; their logs average into the
/// entropy and class terms. Every class present must have at least two
/// members. The per-observation pass is parallelized; results do not depend
/// on the degree of parallelism.
pub fn hat_estimate(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &Bandwidth,
) -> Result<EstimateResult, DegenerateClass> {
    assert!(sample.len() >= 2, "kernel estimate needs N >= 2");
    assert_eq!(
        kernel.dim(),
        sample.dim(),
        "kernel/sample dimension mismatch"
    );
    let s = sample.canonicalized();
    let n = s.len();
    let h = bandwidth.resolve(n);
    let classes = s.max_label() + 1;
    let counts = s.class_counts();
    for (class, &c) in counts.iter().enumerate() {
        if c == 1 {
            return Err(DegenerateClass { class });
        }
    }

    let dim = s.dim();
    let inv_h = 1.0 / h;
    let ln_norm = kernel.ln_norm();
    let hd_ln = (dim as f64) * h.ln();
    let marg_denom_ln = ((n - 1) as f64).ln() + hd_ln;
    let cond_denom_ln: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c >= 2 {
                ((c - 1) as f64).ln() + hd_ln
            } else {
                f64::NAN
            }
        })
        .collect();

    // Per observation: class-partitioned kernel sums in index order, shared
    // between the marginal (total) and the own-class conditional.
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; classes],
            |acc, k| {
                acc.iter_mut().for_each(|a| *a = 0.0);
                let total = match dim {
                    1 => row_sums::<1>(k, &s, kernel, inv_h, acc),
                    2 => row_sums::<2>(k, &s, kernel, inv_h, acc),
                    _ => row_sums_dyn(k, &s, kernel, inv_h, acc),
                };
                let lab = s.label(k);
                let lf_marg = total.ln() + ln_norm - marg_denom_ln;
                let lf_cond = acc[lab].ln() + ln_norm - cond_denom_ln[lab];
                (lf_marg, lf_cond)
            },
        )
        .collect();

    let marg_terms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let h_hat = -pairwise_sum(&marg_terms) / n as f64;
    let class_terms: Vec<f64> = (0..classes)
        .map(|i| {
            let terms: Vec<f64> = rows
                .iter()
                .zip(s.labels())
                .filter(|(_, &l)| l == i)
                .map(|(r, _)| r.1)
                .collect();
            -pairwise_sum(&terms) / n as f64
        })
        .collect();

    Ok(EstimateResult {
        mi_hat: combine(h_hat, &class_terms),
        h_hat,
        p_hat: p_hat(&s, classes - 1),
        class_terms,
        n,
        bandwidth_used: Some(h),
        zero_density_hits: 0,
    })
}

/// Unnormalized kernel sums for observation `k`: per-class partial sums into
/// `acc`, total returned. Iteration is in fixed index order (j < k, then
/// j > k) so the accumulation is reproducible.
fn row_sums<const D: usize>(
    k: usize,
    s: &Sample,
    kernel: &KernelSpec,
    inv_h: f64,
    acc: &mut [f64],
) -> f64 {
    let pts = s.points_flat();
    let labels = s.labels();
    let mut yk = [0.0f64; D];
    yk.copy_from_slice(&pts[k * D..k * D + D]);
    let mut total = 0.0;
    let mut body = |j: usize| {
        let mut r2 = 0.0;
        for c in 0..D {
            let u = (yk[c] - pts[j * D + c]) * inv_h;
            r2 += u * u;
        }
        let v = kernel.unnormalized_from_r2(r2);
        acc[labels[j]] += v;
        total += v;
    };
    for j in 0..k {
        body(j);
    }
    for j in k + 1..s.len() {
        body(j);
    }
    total
}

fn row_sums_dyn(k: usize, s: &Sample, kernel: &KernelSpec, inv_h: f64, acc: &mut [f64]) -> f64 {
    let d = s.dim();
    let pts = s.points_flat();
    let labels = s.labels();
    let yk = s.point(k).to_vec();
    let mut total = 0.0;
    let mut body = |j: usize| {
        let mut r2 = 0.0;
        for c in 0..d {
            let u = (yk[c] - pts[j * d + c]) * inv_h;
            r2 += u * u;
        }
        let v = kernel.unnormalized_from_r2(r2);
        acc[labels[j]] += v;
        total += v;
    };
    for j in 0..k {
        body(j);
    }
    for j in k + 1..s.len() {
        body(j);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::{loo_conditional, loo_marginal};
    use crate::model::ContinuousDensity;
    use approx::assert_relative_eq;

    fn case_shift2() -> MixedPairModel {
        MixedPairModel::new(
            vec![0.3, 0.7],
            vec![
                ContinuousDensity::student_t(3.0, 0.0, 1.0).unwrap(),
                ContinuousDensity::student_t(3.0, 2.0, 1.0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn p_hat_counts() {
        let s = Sample::new(1, vec![0, 0, 1, 1, 1], vec![0.0; 5]).unwrap();
        assert_eq!(p_hat(&s, 1), vec![0.4, 0.6]);
        let all0 = Sample::new(1, vec![0, 0, 0], vec![0.0; 3]).unwrap();
        assert_eq!(p_hat(&all0, 2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn p_hat_sums_to_one_within_rounding() {
        let s = Sample::new(1, vec![0, 1, 2], vec![0.0; 3]).unwrap();
        let p = p_hat(&s, 2);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(0.5, &[0.2, 0.3]), 0.0);
        assert_eq!(combine(1.0, &[]), 1.0);
        assert_relative_eq!(
            combine(0.202, &[0.001, 0.0005]),
            0.2005,
            max_relative = 1e-14
        );
    }

    #[test]
    fn bar_on_unit_density_point_is_zero() {
        // pareto(1,1) has pdf exactly 1 at y = 1
        let model = MixedPairModel::single(ContinuousDensity::pareto(1.0, 1.0).unwrap());
        let s = Sample::new(1, vec![0], vec![1.0]).unwrap();
        let r = bar_estimate(&s, &model);
        assert_eq!(r.class_terms, vec![0.0]);
        assert_eq!(r.h_hat, 0.0);
        assert_eq!(r.mi_hat, 0.0);
        assert_eq!(r.zero_density_hits, 0);
    }

    #[test]
    fn bar_two_point_entropy_term() {
        let model = case_shift2();
        let y1 = 0.3;
        let y2 = 1.8;
        let s = Sample::new(1, vec![0, 1], vec![y1, y2]).unwrap();
        let r = bar_estimate(&s, &model);
        let want = -(model.marginal_pdf(&[y1]).ln() + model.marginal_pdf(&[y2]).ln()) / 2.0;
        assert_relative_eq!(r.h_hat, want, max_relative = 1e-14);
    }

    #[test]
    fn bar_is_identically_zero_under_independence() {
        // f_0 = f_1 makes each observation's marginal and conditional logs equal.
        let t3 = ContinuousDensity::student_t(3.0, 0.0, 1.0).unwrap();
        let model = MixedPairModel::new(vec![0.3, 0.7], vec![t3.clone(), t3]).unwrap();
        for seed in [1u64, 2, 3] {
            let s = model.sample(400, seed);
            let r = bar_estimate(&s, &model);
            assert!(
                r.mi_hat.abs() < 1e-13,
                "independent-model plug-in MI = {}",
                r.mi_hat
            );
        }
    }

    #[test]
    fn bar_counts_zero_density_hits() {
        // Model supported on [1, inf) evaluated on a point below the support.
        let model = MixedPairModel::single(ContinuousDensity::pareto(1.0, 2.0).unwrap());
        let s = Sample::new(1, vec![0], vec![0.5]).unwrap();
        let r = bar_estimate(&s, &model);
        // Both the marginal and the conditional logs hit zero density.
        assert_eq!(r.zero_density_hits, 2);
        assert_eq!(r.mi_hat, 0.0);
    }

    #[test]
    fn hat_rejects_single_member_class() {
        let s = Sample::new(1, vec![0, 0, 1], vec![0.1, 0.9, 2.0]).unwrap();
        let k = KernelSpec::student_t(3.0, 1);
        let b = Bandwidth::explicit(0.5).unwrap();
        assert_eq!(
            hat_estimate(&s, &k, &b).unwrap_err(),
            DegenerateClass { class: 1 }
        );
    }

    #[test]
    fn hat_matches_loo_composition() {
        let model = case_shift2();
        let s = model.sample(60, 11).canonicalized();
        let k = KernelSpec::student_t(3.0, 1);
        let b = Bandwidth::explicit(0.4).unwrap();
        let r = hat_estimate(&s, &k, &b).unwrap();

        let n = s.len();
        let mut marg = Vec::new();
        let mut cond: Vec<Vec<f64>> = vec![Vec::new(); 2];
        for kk in 0..n {
            let y = s.point(kk).to_vec();
            marg.push(loo_marginal(&s, kk, &y, &k, 0.4).ln());
            let lab = s.label(kk);
            cond[lab].push(loo_conditional(&s, lab, kk, &y, &k, 0.4).unwrap().ln());
        }
        let h_want = -pairwise_sum(&marg) / n as f64;
        assert_relative_eq!(r.h_hat, h_want, max_relative = 1e-12);
        for (terms, got) in cond.iter().zip(&r.class_terms) {
            let want = -pairwise_sum(terms) / n as f64;
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn hat_is_bitwise_permutation_invariant() {
        let model = case_shift2();
        let s = model.sample(80, 23);
        // rotate the observations by 17
        let n = s.len();
        let labels: Vec<usize> = (0..n).map(|k| s.label((k + 17) % n)).collect();
        let mut points = Vec::new();
        for k in 0..n {
            points.extend_from_slice(s.point((k + 17) % n));
        }
        let rotated = Sample::new(1, labels, points).unwrap();

        let k = KernelSpec::student_t(3.0, 1);
        let b = Bandwidth::power(1.0, -0.2).unwrap();
        let a = hat_estimate(&s, &k, &b).unwrap();
        let bres = hat_estimate(&rotated, &k, &b).unwrap();
        assert_eq!(a, bres);
    }

    #[test]
    fn hat_construction_identity_is_exact() {
        let model = case_shift2();
        let s = model.sample(120, 5);
        let k = KernelSpec::student_t(3.0, 1);
        let b = Bandwidth::power(1.0, -0.2).unwrap();
        let r = hat_estimate(&s, &k, &b).unwrap();
        assert_eq!(r.mi_hat, combine(r.h_hat, &r.class_terms));
    }

    #[test]
    fn hat_handles_2d_samples() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let model = MixedPairModel::new(
            vec![0.3, 0.7],
            vec![
                ContinuousDensity::multivariate_t(5.0, vec![0.0, 0.0], eye.clone()).unwrap(),
                ContinuousDensity::multivariate_t(25.0, vec![0.0, 0.0], eye).unwrap(),
            ],
        )
        .unwrap();
        let s = model.sample(300, 9);
        let k = KernelSpec::student_t(3.0, 2);
        let b = Bandwidth::power(1.0, -0.2).unwrap();
        let r = hat_estimate(&s, &k, &b).unwrap();
        assert!(r.mi_hat.is_finite());
        assert_eq!(r.mi_hat, combine(r.h_hat, &r.class_terms));
    }
}
