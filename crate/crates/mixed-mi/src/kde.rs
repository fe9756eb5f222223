//! Heavy-tailed kernels and leave-one-out conditional/marginal density
//! estimates.
//!
//! The kernel is the Student-t density (t(nu,0,1) in 1-D, spherical t_nu(0,I)
//! in higher dimensions): its polynomial tails keep every leave-one-out
//! estimate strictly positive, so downstream logs never see zero. Both
//! estimators here are pure functions of their inputs and safe to evaluate
//! concurrently.

use crate::model::Sample;
use crate::numeric::NegPow;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::fmt;

/// Kernel density function on R^d.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    StudentT(StudentTKernel),
}

/// Density of t(nu, 0, 1) for d = 1, of spherical t_nu(0, I) for d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentTKernel {
    nu: f64,
    dim: usize,
    ln_norm: f64,
    norm: f64,
    pow: NegPow,
}

impl KernelSpec {
    pub fn student_t(nu: f64, dim: usize) -> Self {
        assert!(nu > 0.0 && nu.is_finite(), "kernel nu must be positive");
        assert!(dim >= 1, "kernel dim must be at least 1");
        let d = dim as f64;
        let e = 0.5 * (nu + d);
        let ln_norm = ln_gamma(e) - ln_gamma(0.5 * nu) - 0.5 * d * (nu * PI).ln();
        KernelSpec::StudentT(StudentTKernel {
            nu,
            dim,
            ln_norm,
            norm: ln_norm.exp(),
            pow: NegPow::new(e),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::StudentT(k) => k.dim,
        }
    }

    pub fn nu(&self) -> f64 {
        match self {
            KernelSpec::StudentT(k) => k.nu,
        }
    }

    /// K(u), the kernel density at `u`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            KernelSpec::StudentT(k) => {
                assert_eq!(u.len(), k.dim, "kernel_eval: point dimension mismatch");
                let r2: f64 = u.iter().map(|x| x * x).sum();
                k.norm * k.pow.eval(1.0 + r2 / k.nu)
            }
        }
    }

    /// K(u) / K-normalizer given |u|^2; hot-loop form with the normalizing
    /// constant factored out.
    #[inline(always)]
    pub(crate) fn unnormalized_from_r2(&self, r2: f64) -> f64 {
        match self {
            KernelSpec::StudentT(k) => k.pow.eval(1.0 + r2 / k.nu),
        }
    }

    /// ln of the kernel normalizing constant.
    pub(crate) fn ln_norm(&self) -> f64 {
        match self {
            KernelSpec::StudentT(k) => k.ln_norm,
        }
    }
}

/// Smoothing bandwidth, either fixed or a power of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Bandwidth {
    /// Fixed h > 0.
    Explicit { h: f64 },
    /// h = scale * n^exponent with exponent < 0.
    Power { exponent: f64, scale: f64 },
}

impl Bandwidth {
    pub fn explicit(h: f64) -> Result<Self, BandwidthError> {
        if h > 0.0 && h.is_finite() {
            Ok(Bandwidth::Explicit { h })
        } else {
            Err(BandwidthError::NonPositive)
        }
    }

    pub fn power(scale: f64, exponent: f64) -> Result<Self, BandwidthError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(BandwidthError::NonPositive);
        }
        if !(exponent < 0.0 && exponent.is_finite()) {
            return Err(BandwidthError::NonShrinking);
        }
        Ok(Bandwidth::Power { exponent, scale })
    }

    /// Check invariants (used after deserializing raw config values).
    pub fn validate(&self) -> Result<(), BandwidthError> {
        match *self {
            Bandwidth::Explicit { h } => Bandwidth::explicit(h).map(|_| ()),
            Bandwidth::Power { exponent, scale } => Bandwidth::power(scale, exponent).map(|_| ()),
        }
    }

    /// Resolve to a concrete h for a sample of size `n`.
    pub fn resolve(&self, n: usize) -> f64 {
        self.validate().expect("invalid bandwidth");
        match *self {
            Bandwidth::Explicit { h } => h,
            Bandwidth::Power { exponent, scale } => scale * (n as f64).powf(exponent),
        }
    }
}

/// Invalid bandwidth constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthError {
    NonPositive,
    NonShrinking,
}

impl fmt::Display for BandwidthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthError::NonPositive => write!(f, "bandwidth must resolve to a positive value"),
            BandwidthError::NonShrinking => {
                write!(f, "power-rule bandwidth exponent must be negative")
            }
        }
    }
}

impl std::error::Error for BandwidthError {}

/// A class too small for leave-one-out estimation (fewer than two members,
/// making the `count - 1` denominator vanish).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateClass {
    pub class: usize,
}

impl fmt::Display for DegenerateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "class {} has fewer than two members; leave-one-out estimate undefined",
            self.class
        )
    }
}

impl std::error::Error for DegenerateClass {}

fn check_eval_contract(sample: &Sample, k: usize, y: &[f64], kernel: &KernelSpec, h: f64) {
    assert!(k < sample.len(), "leave-out index {k} out of range");
    assert_eq!(y.len(), sample.dim(), "query point dimension mismatch");
    assert_eq!(kernel.dim(), sample.dim(), "kernel dimension mismatch");
    assert!(h > 0.0 && h.is_finite(), "bandwidth must be positive");
}

/// Leave-one-out conditional density estimate for `class` at `y`, excluding
/// observation `k` (0-based):
/// sum over j != k with label j == class of K((y - Y_j)/h), divided by
/// (count(class) - 1) h^d.
///
/// The denominator uses the full-sample class count regardless of the label
/// of `k`, so the mixture identity against the marginal estimate holds
/// exactly.
pub fn loo_conditional(
    sample: &Sample,
    class: usize,
    k: usize,
    y: &[f64],
    kernel: &KernelSpec,
    h: f64,
) -> Result<f64, DegenerateClass> {
    check_eval_contract(sample, k, y, kernel, h);
    let count = sample.labels().iter().filter(|&&l| l == class).count();
    if count < 2 {
        return Err(DegenerateClass { class });
    }
    let d = sample.dim();
    let mut acc = 0.0;
    let mut u = vec![0.0; d];
    for j in 0..sample.len() {
        if j == k || sample.label(j) != class {
            continue;
        }
        let p = sample.point(j);
        for c in 0..d {
            u[c] = (y[c] - p[c]) / h;
        }
        acc += kernel.eval(&u);
    }
    Ok(acc / ((count - 1) as f64 * h.powi(d as i32)))
}

/// Leave-one-out marginal density estimate at `y`, excluding observation `k`:
/// sum over j != k of K((y - Y_j)/h), divided by (N - 1) h^d.
pub fn loo_marginal(sample: &Sample, k: usize, y: &[f64], kernel: &KernelSpec, h: f64) -> f64 {
    check_eval_contract(sample, k, y, kernel, h);
    assert!(sample.len() >= 2, "leave-one-out marginal needs N >= 2");
    let d = sample.dim();
    let mut acc = 0.0;
    let mut u = vec![0.0; d];
    for j in 0..sample.len() {
        if j == k {
            continue;
        }
        let p = sample.point(j);
        for c in 0..d {
            u[c] = (y[c] - p[c]) / h;
        }
        acc += kernel.eval(&u);
    }
    acc / ((sample.len() - 1) as f64 * h.powi(d as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContinuousDensity, MixedPairModel};
    use crate::quad::{integrate, Domain, QuadratureSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn t3_kernel() -> KernelSpec {
        KernelSpec::student_t(3.0, 1)
    }

    #[test]
    fn kernel_value_at_origin() {
        let want = 2.0 / (PI * 3.0f64.sqrt());
        assert_relative_eq!(t3_kernel().eval(&[0.0]), want, max_relative = 1e-13);
    }

    #[test]
    fn kernel_is_symmetric() {
        let k = t3_kernel();
        for u in [0.1, 1.0, 7.3, 1234.5] {
            assert_eq!(k.eval(&[u]), k.eval(&[-u]));
        }
    }

    #[test]
    fn kernel_never_underflows_at_moderate_range() {
        let k = t3_kernel();
        assert!(k.eval(&[1e6]) > 0.0);
        assert!(k.eval(&[-1e6]) > 0.0);
        let k2 = KernelSpec::student_t(3.0, 2);
        assert!(k2.eval(&[1e6, -1e6]) > 0.0);
    }

    #[test]
    fn kernel_integrates_to_one() {
        let k = t3_kernel();
        let q = integrate(|u| k.eval(&[u]), Domain::Line, &QuadratureSpec::default()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_rules() {
        assert_eq!(Bandwidth::explicit(0.25).unwrap().resolve(1000), 0.25);
        let h = Bandwidth::power(1.0, -0.2).unwrap().resolve(50_000);
        assert_relative_eq!(h, (50_000f64).powf(-0.2), max_relative = 1e-15);
        assert!(Bandwidth::explicit(0.0).is_err());
        assert!(Bandwidth::power(1.0, 0.2).is_err());
        assert!(Bandwidth::power(-1.0, -0.2).is_err());
    }

    fn two_point_sample(labels: [usize; 2], ys: [f64; 2]) -> Sample {
        Sample::new(1, labels.to_vec(), ys.to_vec()).unwrap()
    }

    #[test]
    fn loo_conditional_single_term() {
        // labels (0,0), leave out the second: one term, denominator (2-1) h
        let s = two_point_sample([0, 0], [0.4, 1.9]);
        let k = t3_kernel();
        let h = 0.7;
        let y = [1.1];
        let got = loo_conditional(&s, 0, 1, &y, &k, h).unwrap();
        let want = k.eval(&[(y[0] - 0.4) / h]) / h;
        assert_relative_eq!(got, want, max_relative = 1e-14);
    }

    #[test]
    fn loo_conditional_degenerate_cases() {
        let s = two_point_sample([0, 1], [0.4, 1.9]);
        let k = t3_kernel();
        // class 0 has one member: denominator 0
        assert_eq!(
            loo_conditional(&s, 0, 1, &[0.0], &k, 0.5),
            Err(DegenerateClass { class: 0 })
        );
        // absent class
        assert_eq!(
            loo_conditional(&s, 3, 0, &[0.0], &k, 0.5),
            Err(DegenerateClass { class: 3 })
        );
    }

    #[test]
    fn loo_marginal_single_term() {
        let s = two_point_sample([0, 1], [0.4, 1.9]);
        let k = t3_kernel();
        let h = 0.7;
        let y = [0.2];
        let got = loo_marginal(&s, 0, &y, &k, h);
        let want = k.eval(&[(y[0] - 1.9) / h]) / h;
        assert_relative_eq!(got, want, max_relative = 1e-14);
    }

    #[test]
    fn loo_marginal_integrates_to_one() {
        let model = MixedPairModel::new(
            vec![0.5, 0.5],
            vec![
                ContinuousDensity::student_t(3.0, 0.0, 1.0).unwrap(),
                ContinuousDensity::student_t(3.0, 2.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let s = model.sample(10, 17);
        let k = t3_kernel();
        let q = integrate(
            |y| loo_marginal(&s, 3, &[y], &k, 0.5),
            Domain::Line,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-6, "integral = {}", q.value);
    }

    #[test]
    fn huge_bandwidth_flattens_to_kernel_peak() {
        let s = Sample::new(1, vec![0; 10], (0..10).map(|i| i as f64).collect()).unwrap();
        let k = t3_kernel();
        let h = 1e6;
        let got = h * loo_marginal(&s, 0, &[4.5], &k, h);
        let want = k.eval(&[0.0]);
        assert_relative_eq!(got, want, max_relative = 1e-3);
    }

    /// Random small samples where every class has at least two members.
    fn identity_sample_strategy() -> impl Strategy<Value = (Sample, f64)> {
        (1usize..=3)
            .prop_flat_map(|classes| {
                let counts = proptest::collection::vec(2usize..=4, classes);
                (counts, 0.05f64..2.0)
            })
            .prop_flat_map(|(counts, h)| {
                let n: usize = counts.iter().sum();
                let labels: Vec<usize> = counts
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
                    .collect();
                (
                    Just(labels),
                    proptest::collection::vec(-5.0f64..5.0, n),
                    Just(h),
                )
            })
            .prop_map(|(labels, ys, h)| (Sample::new(1, labels, ys).unwrap(), h))
    }

    proptest! {
        /// The marginal estimate decomposes exactly over class estimates with
        /// weights (count_i - 1)/(N - 1).
        #[test]
        fn marginal_decomposes_over_classes((s, h) in identity_sample_strategy(), yq in -6.0f64..6.0) {
            let k = t3_kernel();
            let n = s.len();
            let counts = s.class_counts();
            for kk in 0..n {
                let marg = loo_marginal(&s, kk, &[yq], &k, h);
                let mut recon = 0.0;
                for (i, &c) in counts.iter().enumerate() {
                    let w = (c as f64 - 1.0) / (n as f64 - 1.0);
                    recon += w * loo_conditional(&s, i, kk, &[yq], &k, h).unwrap();
                }
                prop_assert!((marg - recon).abs() <= 1e-12 * marg.abs().max(1e-300),
                    "k={kk}: marginal {marg} vs reconstructed {recon}");
            }
        }

        /// Shifting every point and the query by the same offset leaves the
        /// estimates unchanged.
        #[test]
        fn translation_equivariance((s, h) in identity_sample_strategy(), yq in -6.0f64..6.0, shift in -3.0f64..3.0) {
            let k = t3_kernel();
            let shifted = Sample::new(
                1,
                s.labels().to_vec(),
                s.points_flat().iter().map(|y| y + shift).collect(),
            ).unwrap();
            for kk in 0..s.len() {
                let a = loo_marginal(&s, kk, &[yq], &k, h);
                let b = loo_marginal(&shifted, kk, &[yq + shift], &k, h);
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }

        /// Estimates are nonnegative, and strictly positive with this kernel.
        #[test]
        fn estimates_are_positive((s, h) in identity_sample_strategy(), yq in -6.0f64..6.0) {
            let k = t3_kernel();
            for kk in 0..s.len() {
                prop_assert!(loo_marginal(&s, kk, &[yq], &k, h) > 0.0);
                prop_assert!(loo_conditional(&s, 0, kk, &[yq], &k, h).unwrap() > 0.0);
            }
        }
    }
}
