//! Generative models for mixed pairs: a discrete label with a parametric
//! continuous conditional density per class.
//!
//! Densities evaluate exactly (pdf and log-pdf) and sample reproducibly from
//! an explicit 64-bit seed. Models and densities are immutable after
//! construction and safe to share across threads.

use crate::numeric::NegPow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, OpenClosed01, StandardNormal};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::fmt;

/// Construction and validation failures for models and samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// A distribution parameter is out of range (nonpositive or non-finite).
    BadParameter(&'static str),
    /// Shape matrix is not symmetric positive-definite.
    ShapeNotSpd,
    /// Class probabilities must lie in (0, 1] and sum to 1 within 1e-12.
    BadProbabilities,
    /// Mixture components must share a single dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A model needs at least one class.
    EmptyModel,
    /// A sample needs at least one observation.
    EmptySample,
    /// Label exceeds the number of classes in the model.
    LabelOutOfRange { label: usize, classes: usize },
    /// Coordinate buffer length disagrees with labels x dim.
    SampleShape {
        labels: usize,
        coords: usize,
        dim: usize,
    },
    /// Sample points must be finite.
    NonFinitePoint,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::BadParameter(what) => write!(f, "invalid parameter: {what}"),
            ModelError::ShapeNotSpd => write!(f, "shape matrix is not symmetric positive-definite"),
            ModelError::BadProbabilities => {
                write!(f, "class probabilities must lie in (0, 1] and sum to 1")
            }
            ModelError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ModelError::EmptyModel => write!(f, "model has no classes"),
            ModelError::EmptySample => write!(f, "sample is empty"),
            ModelError::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            ModelError::SampleShape {
                labels,
                coords,
                dim,
            } => write!(
                f,
                "sample shape mismatch: {labels} labels, {coords} coordinates, dim {dim}"
            ),
            ModelError::NonFinitePoint => write!(f, "sample contains a non-finite coordinate"),
        }
    }
}

impl std::error::Error for ModelError {}

/// A parametric density on R^d with exact pdf/log-pdf and seeded sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousDensity {
    StudentT(StudentT),
    Pareto(Pareto),
    MultivariateT(MultivariateT),
}

/// Univariate Student t with location and scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentT {
    nu: f64,
    mu: f64,
    sigma: f64,
    ln_norm: f64,
    norm: f64,
    pow: NegPow,
}

/// Pareto on [x_m, inf) with density `alpha x_m^alpha y^-(alpha+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pareto {
    x_m: f64,
    alpha: f64,
    ln_norm: f64,
    norm: f64,
    pow: NegPow,
}

/// Multivariate Student t with shape matrix `shape` (not the covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateT {
    nu: f64,
    mu: Vec<f64>,
    shape: Vec<f64>,
    chol: Vec<f64>,
    dim: usize,
    ln_norm: f64,
    norm: f64,
    pow: NegPow,
}

fn check_positive(x: f64, what: &'static str) -> Result<(), ModelError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ModelError::BadParameter(what))
    }
}

/// Lower Cholesky factor of a symmetric positive-definite row-major matrix.
fn cholesky_lower(dim: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if s.is_nan() || s <= 0.0 {
                    return None;
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Some(l)
}

impl ContinuousDensity {
    /// Student t with degrees of freedom `nu`, location `mu`, scale `sigma`.
    pub fn student_t(nu: f64, mu: f64, sigma: f64) -> Result<Self, ModelError> {
        check_positive(nu, "student_t nu")?;
        check_positive(sigma, "student_t sigma")?;
        if !mu.is_finite() {
            return Err(ModelError::BadParameter("student_t mu"));
        }
        let e = 0.5 * (nu + 1.0);
        let ln_norm = ln_gamma(e) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln() - sigma.ln();
        Ok(ContinuousDensity::StudentT(StudentT {
            nu,
            mu,
            sigma,
            ln_norm,
            norm: ln_norm.exp(),
            pow: NegPow::new(e),
        }))
    }

    /// Pareto with scale `x_m` and shape `alpha`.
    pub fn pareto(x_m: f64, alpha: f64) -> Result<Self, ModelError> {
        check_positive(x_m, "pareto x_m")?;
        check_positive(alpha, "pareto alpha")?;
        let ln_norm = alpha.ln() + alpha * x_m.ln();
        Ok(ContinuousDensity::Pareto(Pareto {
            x_m,
            alpha,
            ln_norm,
            norm: ln_norm.exp(),
            pow: NegPow::new(alpha + 1.0),
        }))
    }

    /// Multivariate t with degrees of freedom `nu`, location `mu` and
    /// symmetric positive-definite shape matrix `shape` (row per `Vec`).
    pub fn multivariate_t(nu: f64, mu: Vec<f64>, shape: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        check_positive(nu, "multivariate_t nu")?;
        let dim = mu.len();
        if dim == 0 {
            return Err(ModelError::BadParameter("multivariate_t mu is empty"));
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::BadParameter("multivariate_t mu"));
        }
        if shape.len() != dim || shape.iter().any(|row| row.len() != dim) {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                got: shape.len(),
            });
        }
        let flat: Vec<f64> = shape.iter().flatten().copied().collect();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::ShapeNotSpd);
        }
        let scale = flat.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (flat[i * dim + j] - flat[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(ModelError::ShapeNotSpd);
                }
            }
        }
        let chol = cholesky_lower(dim, &flat).ok_or(ModelError::ShapeNotSpd)?;
        let ln_det_sqrt: f64 = (0..dim).map(|i| chol[i * dim + i].ln()).sum();
        let e = 0.5 * (nu + dim as f64);
        let ln_norm =
            ln_gamma(e) - ln_gamma(0.5 * nu) - 0.5 * dim as f64 * (nu * PI).ln() - ln_det_sqrt;
        Ok(ContinuousDensity::MultivariateT(MultivariateT {
            nu,
            mu,
            shape: flat,
            chol,
            dim,
            ln_norm,
            norm: ln_norm.exp(),
            pow: NegPow::new(e),
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            ContinuousDensity::StudentT(_) | ContinuousDensity::Pareto(_) => 1,
            ContinuousDensity::MultivariateT(t) => t.dim,
        }
    }

    /// Density value at `y`. Panics if `y.len() != self.dim()`.
    pub fn pdf(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.dim(), "pdf: point dimension mismatch");
        match self {
            ContinuousDensity::StudentT(t) => {
                let u = (y[0] - t.mu) / t.sigma;
                t.norm * t.pow.eval(1.0 + u * u / t.nu)
            }
            ContinuousDensity::Pareto(p) => {
                if y[0] < p.x_m {
                    0.0
                } else {
                    p.norm * p.pow.eval(y[0])
                }
            }
            ContinuousDensity::MultivariateT(t) => {
                let delta = t.mahalanobis(y);
                t.norm * t.pow.eval(1.0 + delta / t.nu)
            }
        }
    }

    /// `ln pdf(y)` where the density is positive; `None` marks a zero-density
    /// point (off the support), leaving any `log 0` convention to the caller.
    pub fn log_pdf(&self, y: &[f64]) -> Option<f64> {
        assert_eq!(y.len(), self.dim(), "log_pdf: point dimension mismatch");
        match self {
            ContinuousDensity::StudentT(t) => {
                let u = (y[0] - t.mu) / t.sigma;
                Some(t.ln_norm - t.pow.exponent() * (u * u / t.nu).ln_1p())
            }
            ContinuousDensity::Pareto(p) => {
                if y[0] < p.x_m {
                    None
                } else {
                    Some(p.ln_norm - (p.alpha + 1.0) * y[0].ln())
                }
            }
            ContinuousDensity::MultivariateT(t) => {
                let delta = t.mahalanobis(y);
                Some(t.ln_norm - t.pow.exponent() * (delta / t.nu).ln_1p())
            }
        }
    }

    /// Polynomial decay index of the distribution tail (`nu` for Student t,
    /// `alpha` for Pareto), as constrained per dimension by the estimator's
    /// asymptotics.
    pub fn tail_index(&self) -> f64 {
        match self {
            ContinuousDensity::StudentT(t) => t.nu,
            ContinuousDensity::Pareto(p) => p.alpha,
            ContinuousDensity::MultivariateT(t) => t.nu,
        }
    }

    /// Lower support edge in one dimension, if the support is a half-line.
    pub fn support_lower(&self) -> Option<f64> {
        match self {
            ContinuousDensity::Pareto(p) => Some(p.x_m),
            _ => None,
        }
    }

    /// Interior points worth splitting quadrature panels at (1-D only).
    pub fn hint_points(&self) -> Vec<f64> {
        match self {
            ContinuousDensity::StudentT(t) => vec![t.mu - t.sigma, t.mu, t.mu + t.sigma],
            ContinuousDensity::Pareto(p) => vec![p.x_m, 2.0 * p.x_m],
            ContinuousDensity::MultivariateT(_) => Vec::new(),
        }
    }

    /// For a multivariate t whose shape is `s2 * I`: the center and `s2`.
    pub fn spherical(&self) -> Option<(&[f64], f64)> {
        match self {
            ContinuousDensity::MultivariateT(t) => {
                let d = t.dim;
                let s2 = t.shape[0];
                for i in 0..d {
                    for j in 0..d {
                        let want = if i == j { s2 } else { 0.0 };
                        if t.shape[i * d + j] != want {
                            return None;
                        }
                    }
                }
                Some((&t.mu, s2))
            }
            _ => None,
        }
    }

    fn sampler(&self) -> DensitySampler {
        match self {
            ContinuousDensity::StudentT(t) => DensitySampler::StudentT {
                mu: t.mu,
                sigma: t.sigma,
                nu: t.nu,
                chi: ChiSquared::new(t.nu).expect("validated at construction"),
            },
            ContinuousDensity::Pareto(p) => DensitySampler::Pareto {
                x_m: p.x_m,
                inv_neg_alpha: -1.0 / p.alpha,
            },
            ContinuousDensity::MultivariateT(t) => DensitySampler::Mvt {
                mu: t.mu.clone(),
                chol: t.chol.clone(),
                dim: t.dim,
                nu: t.nu,
                chi: ChiSquared::new(t.nu).expect("validated at construction"),
            },
        }
    }
}

impl MultivariateT {
    /// (y - mu)' shape^-1 (y - mu) via forward substitution on the Cholesky
    /// factor.
    fn mahalanobis(&self, y: &[f64]) -> f64 {
        let d = self.dim;
        let mut buf = [0.0f64; 8];
        let mut heap;
        let w: &mut [f64] = if d <= 8 {
            &mut buf[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        for i in 0..d {
            let mut s = y[i] - self.mu[i];
            for (k, &wk) in w[..i].iter().enumerate() {
                s -= self.chol[i * d + k] * wk;
            }
            w[i] = s / self.chol[i * d + i];
        }
        w.iter().map(|x| x * x).sum()
    }
}

enum DensitySampler {
    StudentT {
        mu: f64,
        sigma: f64,
        nu: f64,
        chi: ChiSquared<f64>,
    },
    Pareto {
        x_m: f64,
        inv_neg_alpha: f64,
    },
    Mvt {
        mu: Vec<f64>,
        chol: Vec<f64>,
        dim: usize,
        nu: f64,
        chi: ChiSquared<f64>,
    },
}

impl DensitySampler {
    /// Draw one point, appending its coordinates to `out`.
    ///
    /// Student t uses the normal/chi-squared representation
    /// `mu + sigma z sqrt(nu/u)`; Pareto uses the inverse CDF
    /// `x_m U^{-1/alpha}` with U in (0, 1].
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            DensitySampler::StudentT { mu, sigma, nu, chi } => {
                let z: f64 = rng.sample(StandardNormal);
                let u: f64 = rng.sample(chi);
                out.push(mu + sigma * z * (nu / u).sqrt());
            }
            DensitySampler::Pareto { x_m, inv_neg_alpha } => {
                let u: f64 = rng.sample(OpenClosed01);
                out.push(x_m * u.powf(*inv_neg_alpha));
            }
            DensitySampler::Mvt {
                mu,
                chol,
                dim,
                nu,
                chi,
            } => {
                let d = *dim;
                let u: f64 = rng.sample(chi);
                let w = (nu / u).sqrt();
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..d {
                    let mut acc = 0.0;
                    for k in 0..=i {
                        acc += chol[i * d + k] * z[k];
                    }
                    out.push(mu[i] + w * acc);
                }
            }
        }
    }
}

/// Discrete class probabilities with one continuous conditional per class.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPairModel {
    probs: Vec<f64>,
    conditionals: Vec<ContinuousDensity>,
    dim: usize,
}

impl MixedPairModel {
    /// Build a model from class probabilities and matching conditionals.
    ///
    /// Probabilities must lie in (0, 1] and sum to 1 within 1e-12; a single
    /// class with probability 1 is allowed as the degenerate case.
    pub fn new(probs: Vec<f64>, conditionals: Vec<ContinuousDensity>) -> Result<Self, ModelError> {
        if probs.is_empty() || conditionals.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        if probs.len() != conditionals.len() {
            return Err(ModelError::DimensionMismatch {
                expected: probs.len(),
                got: conditionals.len(),
            });
        }
        if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(ModelError::BadProbabilities);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::BadProbabilities);
        }
        let dim = conditionals[0].dim();
        for c in &conditionals {
            if c.dim() != dim {
                return Err(ModelError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        Ok(MixedPairModel {
            probs,
            conditionals,
            dim,
        })
    }

    /// Degenerate single-class model carrying just one density.
    pub fn single(density: ContinuousDensity) -> Self {
        MixedPairModel::new(vec![1.0], vec![density]).expect("single-class model is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn conditionals(&self) -> &[ContinuousDensity] {
        &self.conditionals
    }

    /// Marginal density of the continuous coordinate: sum_i p_i f_i(y).
    pub fn marginal_pdf(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.dim, "marginal_pdf: point dimension mismatch");
        self.probs
            .iter()
            .zip(&self.conditionals)
            .map(|(p, f)| p * f.pdf(y))
            .sum()
    }

    /// Log of the marginal density; `None` where it is exactly zero.
    pub fn marginal_log_pdf(&self, y: &[f64]) -> Option<f64> {
        let v = self.marginal_pdf(y);
        if v > 0.0 {
            Some(v.ln())
        } else {
            None
        }
    }

    /// Lower support edge when every class is supported on a half-line.
    pub fn support_lower(&self) -> Option<f64> {
        let mut lo = f64::INFINITY;
        for c in &self.conditionals {
            lo = lo.min(c.support_lower()?);
        }
        Some(lo)
    }

    /// Quadrature breakpoints: class support edges and centers.
    pub fn hint_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .conditionals
            .iter()
            .flat_map(|c| c.hint_points())
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Common center when the model is a 2-D mixture of spherical t's with
    /// equal centers; oracle integrals are then radially reducible.
    pub fn spherical_center(&self) -> Option<Vec<f64>> {
        if self.dim != 2 {
            return None;
        }
        let (first, _) = self.conditionals[0].spherical()?;
        let center = first.to_vec();
        for c in &self.conditionals[1..] {
            let (mu, _) = c.spherical()?;
            if mu != center.as_slice() {
                return None;
            }
        }
        Some(center)
    }

    /// Draw `n` labelled points deterministically from `(model, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Sample {
        assert!(n >= 1, "sample size must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samplers: Vec<DensitySampler> = self.conditionals.iter().map(|c| c.sampler()).collect();
        let mut cum: Vec<f64> = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;

        let mut labels = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut lab = 0usize;
            while u >= cum[lab] {
                lab += 1;
            }
            labels.push(lab);
            samplers[lab].sample_into(&mut rng, &mut points);
        }
        Sample {
            dim: self.dim,
            labels,
            points,
        }
    }
}

/// Derive an independent per-task seed from a master seed and task index
/// (splitmix-style finalizer; order-free and collision-scrambled).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// N labelled points in R^d, stored with a flat coordinate buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    labels: Vec<usize>,
    points: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, labels: Vec<usize>, points: Vec<f64>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::BadParameter("sample dim"));
        }
        if labels.is_empty() {
            return Err(ModelError::EmptySample);
        }
        if points.len() != labels.len() * dim {
            return Err(ModelError::SampleShape {
                labels: labels.len(),
                coords: points.len(),
                dim,
            });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinitePoint);
        }
        Ok(Sample {
            dim,
            labels,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn label(&self, k: usize) -> usize {
        self.labels[k]
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn max_label(&self) -> usize {
        *self.labels.iter().max().expect("sample is non-empty")
    }

    /// Occurrences of each label in 0..=max_label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.max_label() + 1];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Reorder observations into a canonical order: by label, then by
    /// coordinates. Estimates computed over the canonical order are
    /// bit-identical under any permutation of the input.
    pub fn canonicalized(&self) -> Sample {
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            self.labels[a].cmp(&self.labels[b]).then_with(|| {
                let pa = self.point(a);
                let pb = self.point(b);
                for c in 0..self.dim {
                    let ord = pa[c].total_cmp(&pb[c]);
                    if ord != std::cmp::Ordering::Equal {
                        return ord;
                    }
                }
                std::cmp::Ordering::Equal
            })
        });
        let mut labels = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n * self.dim);
        for &i in &idx {
            labels.push(self.labels[i]);
            points.extend_from_slice(self.point(i));
        }
        Sample {
            dim: self.dim,
            labels,
            points,
        }
    }
}
