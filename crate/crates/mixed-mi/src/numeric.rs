//! Small numeric helpers: deterministic reductions and fast negative powers.

/// Pairwise (tree) summation of a slice in its given order.
///
/// The grouping depends only on the slice length, so the result is a pure
/// function of the element sequence: identical across thread counts and
/// repeated runs, and more accurate than naive accumulation for long sums.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean via pairwise summation.
pub fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "mean of empty slice");
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample standard deviation (divisor n-1). Returns 0 for n = 1.
pub fn sample_sd(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "sample_sd of empty slice");
    if xs.len() == 1 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt()
}

/// Pearson correlation of two equal-length slices.
///
/// Returns `None` when either slice is constant (undefined correlation).
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "pearson: length mismatch");
    assert!(xs.len() >= 2, "pearson: need at least two points");
    let mx = mean(xs);
    let my = mean(ys);
    let dx: Vec<f64> = xs.iter().map(|&x| x - mx).collect();
    let dy: Vec<f64> = ys.iter().map(|&y| y - my).collect();
    let sxy = pairwise_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    let sxx = pairwise_sum(&dx.iter().map(|a| a * a).collect::<Vec<_>>());
    let syy = pairwise_sum(&dy.iter().map(|a| a * a).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Precomputed strategy for evaluating `x^{-e}` with `e > 0`.
///
/// Integer and half-integer exponents avoid `powf` in hot loops; the Student-t
/// densities and kernels used here all have `(nu + d) / 2` in one of these
/// classes for integer `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NegPow {
    Int(i32),
    HalfInt(i32),
    General(f64),
}

impl NegPow {
    /// Classify a positive exponent `e`; `eval` then computes `x^{-e}`.
    pub fn new(e: f64) -> Self {
        assert!(e > 0.0 && e.is_finite(), "exponent must be positive");
        let r = e.round();
        if e == r && r.abs() < 64.0 {
            NegPow::Int(r as i32)
        } else {
            let r2 = (2.0 * e).round();
            if 2.0 * e == r2 && r2.abs() < 128.0 {
                NegPow::HalfInt((e - 0.5) as i32)
            } else {
                NegPow::General(e)
            }
        }
    }

    /// `x^{-e}` for `x > 0`.
    #[inline(always)]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NegPow::Int(p) => x.powi(-p),
            NegPow::HalfInt(p) => 1.0 / (x.powi(p) * x.sqrt()),
            NegPow::General(e) => x.powf(-e),
        }
    }

    /// The positive exponent `e` itself.
    pub fn exponent(&self) -> f64 {
        match *self {
            NegPow::Int(p) => p as f64,
            NegPow::HalfInt(p) => p as f64 + 0.5,
            NegPow::General(e) => e,
        }
    }
}
