//! Adaptive Gauss–Kronrod quadrature over finite, half-infinite and infinite
//! intervals, plus an iterated 2-D fallback.
//!
//! Infinite ends are compactified to (0, 1) before subdivision so that the
//! adaptive bisection remains effective on integrands with polynomial tails.

use crate::numeric::pairwise_sum;
use std::fmt;

/// 15-point Kronrod abscissae on [0, 1] side of [-1, 1] (QUADPACK QK15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Embedded 7-point Gauss weights (points are `XGK[1], XGK[3], XGK[5], XGK[7]`).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Coordinate map used to pull an infinite tail back to (0, 1).
///
/// `Rational` (`y = a + t/(1-t)`) handles polynomially decaying integrands;
/// `Exp` (`y = a - ln(1-t)`) suits exponentially decaying ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMap {
    Rational,
    Exp,
}

/// Tolerances and budget for adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            tail_map: TailMap::Rational,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) {
        assert!(self.abs_tol > 0.0, "abs_tol must be positive");
        assert!(self.rel_tol > 0.0, "rel_tol must be positive");
        assert!(self.max_subdivisions >= 1, "max_subdivisions must be >= 1");
    }

    /// A copy with the absolute tolerance split across `n` panels.
    fn per_panel(&self, n: usize) -> QuadratureSpec {
        let mut s = self.clone();
        s.abs_tol /= n.max(1) as f64;
        s
    }
}

/// Integration domain for a scalar integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Finite interval [a, b].
    Interval(f64, f64),
    /// [a, +inf).
    HalfLineUp(f64),
    /// (-inf, b].
    HalfLineDown(f64),
    /// The whole real line.
    Line,
}

/// Value and error estimate of a computed integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub err: f64,
}

/// Failure to reach the requested tolerance within the subdivision budget.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadError {
    NonConvergence { value: f64, err: f64 },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::NonConvergence { value, err } => write!(
                f,
                "quadrature did not converge (best estimate {value} with error {err})"
            ),
        }
    }
}

impl std::error::Error for QuadError {}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// One 15-point Kronrod evaluation on [a, b] with the QUADPACK error estimate.
#[allow(clippy::needless_range_loop)]
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut fv1 = [0.0f64; 7];
    let mut fv2 = [0.0f64; 7];

    let mut result_gauss = f_center * WG[3];
    let mut result_kronrod = f_center * WGK[7];
    let mut resabs = result_kronrod.abs();

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let abscissa = half * XGK[jtw];
        let fval1 = f(center - abscissa);
        let fval2 = f(center + abscissa);
        fv1[jtw] = fval1;
        fv2[jtw] = fval2;
        result_gauss += WG[j] * (fval1 + fval2);
        result_kronrod += WGK[jtw] * (fval1 + fval2);
        resabs += WGK[jtw] * (fval1.abs() + fval2.abs());
    }

    for j in 0..4 {
        let jtwm1 = 2 * j;
        let abscissa = half * XGK[jtwm1];
        let fval1 = f(center - abscissa);
        let fval2 = f(center + abscissa);
        fv1[jtwm1] = fval1;
        fv2[jtwm1] = fval2;
        result_kronrod += WGK[jtwm1] * (fval1 + fval2);
        resabs += WGK[jtwm1] * (fval1.abs() + fval2.abs());
    }

    let mean = result_kronrod * 0.5;
    let mut resasc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let raw_err = (result_kronrod - result_gauss) * half;
    let value = result_kronrod * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();

    Panel {
        a,
        b,
        value,
        err: rescale_error(raw_err, resabs, resasc),
    }
}

/// QUADPACK heuristic turning |K15 - G7| into a defensible error bound.
fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

/// Globally adaptive bisection on a finite interval.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    let mut panels = vec![qk15(f, a, b)];
    loop {
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let value = pairwise_sum(&panels.iter().map(|p| p.value).collect::<Vec<_>>());
        // A non-finite estimate (node on a singularity) can never count as
        // converged; keep subdividing so the singular panel shrinks away.
        if value.is_finite()
            && err.is_finite()
            && err <= spec.abs_tol.max(spec.rel_tol * value.abs())
        {
            return Ok(Quadrature { value, err });
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(QuadError::NonConvergence { value, err });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Interval exhausted at machine precision.
            let value = pairwise_sum(&panels.iter().map(|p| p.value).collect::<Vec<_>>());
            return Err(QuadError::NonConvergence { value, err });
        }
        panels[worst] = qk15(f, a, mid);
        panels.push(qk15(f, mid, b));
    }
}

/// Integrate `f` over `domain` to the spec's tolerances.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    domain: Domain,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    integrate_with_breaks(&f, domain, &[], spec)
}

/// Integrate with interior breakpoints (support edges, mixture centers) that
/// seed the panel decomposition. Breakpoints outside the domain are ignored.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    domain: Domain,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    spec.validate();
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let panels: Vec<Domain> = match domain {
        Domain::Interval(a, b) => {
            assert!(
                a.is_finite() && b.is_finite() && a < b,
                "bad interval [{a}, {b}]"
            );
            pts.retain(|&x| x > a && x < b);
            let mut edges = vec![a];
            edges.extend(&pts);
            edges.push(b);
            edges
                .windows(2)
                .map(|w| Domain::Interval(w[0], w[1]))
                .collect()
        }
        Domain::HalfLineUp(a) => {
            assert!(a.is_finite());
            pts.retain(|&x| x > a);
            let mut out = Vec::new();
            let mut lo = a;
            for &x in &pts {
                out.push(Domain::Interval(lo, x));
                lo = x;
            }
            out.push(Domain::HalfLineUp(lo));
            out
        }
        Domain::HalfLineDown(b) => {
            assert!(b.is_finite());
            pts.retain(|&x| x < b);
            let mut out = Vec::new();
            let mut hi = b;
            for &x in pts.iter().rev() {
                out.push(Domain::Interval(x, hi));
                hi = x;
            }
            out.push(Domain::HalfLineDown(hi));
            out
        }
        Domain::Line => {
            if pts.is_empty() {
                pts.push(0.0);
            }
            let mut out = vec![Domain::HalfLineDown(pts[0])];
            for w in pts.windows(2) {
                out.push(Domain::Interval(w[0], w[1]));
            }
            out.push(Domain::HalfLineUp(*pts.last().unwrap()));
            out
        }
    };

    let per = spec.per_panel(panels.len());
    let mut values = Vec::with_capacity(panels.len());
    let mut err = 0.0;
    for p in panels {
        let q = integrate_panel(f, p, &per)?;
        values.push(q.value);
        err += q.err;
    }
    Ok(Quadrature {
        value: pairwise_sum(&values),
        err,
    })
}

fn integrate_panel<F: Fn(f64) -> f64>(
    f: &F,
    domain: Domain,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    match domain {
        Domain::Interval(a, b) => adaptive(f, a, b, spec),
        Domain::HalfLineUp(a) => match spec.tail_map {
            TailMap::Rational => adaptive(
                &|t: f64| {
                    let om = 1.0 - t;
                    f(a + t / om) / (om * om)
                },
                0.0,
                1.0,
                spec,
            ),
            TailMap::Exp => adaptive(
                &|t: f64| {
                    let om = 1.0 - t;
                    f(a - om.ln()) / om
                },
                0.0,
                1.0,
                spec,
            ),
        },
        Domain::HalfLineDown(b) => match spec.tail_map {
            TailMap::Rational => adaptive(
                &|t: f64| {
                    let om = 1.0 - t;
                    f(b - t / om) / (om * om)
                },
                0.0,
                1.0,
                spec,
            ),
            TailMap::Exp => adaptive(
                &|t: f64| {
                    let om = 1.0 - t;
                    f(b + om.ln()) / om
                },
                0.0,
                1.0,
                spec,
            ),
        },
        Domain::Line => unreachable!("Line is decomposed before reaching integrate_panel"),
    }
}

/// Iterated 2-D integration over the whole plane.
///
/// The inner integral runs at a tightened tolerance; its largest observed
/// error is folded into the reported estimate. This path is the general
/// fallback; radially symmetric integrands should be reduced to 1-D instead.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    use std::cell::Cell;
    spec.validate();
    let inner_spec = QuadratureSpec {
        abs_tol: spec.abs_tol * 0.1,
        rel_tol: spec.rel_tol * 0.1,
        ..spec.clone()
    };
    let inner_failure: Cell<Option<QuadError>> = Cell::new(None);
    let max_inner_err = Cell::new(0.0f64);

    let outer = integrate(
        |x: f64| match integrate(|y: f64| f(x, y), Domain::Line, &inner_spec) {
            Ok(q) => {
                max_inner_err.set(max_inner_err.get().max(q.err));
                q.value
            }
            Err(e) => {
                inner_failure.set(Some(e));
                f64::NAN
            }
        },
        Domain::Line,
        spec,
    );

    if let Some(e) = inner_failure.take() {
        return Err(e);
    }
    let q = outer?;
    if !q.value.is_finite() {
        return Err(QuadError::NonConvergence {
            value: q.value,
            err: q.err,
        });
    }
    Ok(Quadrature {
        value: q.value,
        err: q.err + max_inner_err.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn polynomial_is_near_exact() {
        let q = integrate(|x| 3.0 * x * x, Domain::Interval(0.0, 2.0), &spec()).unwrap();
        assert!((q.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_over_line() {
        let q = integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Domain::Line,
            &spec(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-9, "got {}", q.value);
    }

    #[test]
    fn heavy_tail_half_line() {
        // \int_1^inf 2 x^-3 dx = 1
        let q = integrate(|x| 2.0 * x.powi(-3), Domain::HalfLineUp(1.0), &spec()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10, "got {}", q.value);
    }

    #[test]
    fn half_line_down_matches_up_by_symmetry() {
        let up = integrate(|x| (1.0 + x * x).powi(-2), Domain::HalfLineUp(0.0), &spec()).unwrap();
        let down = integrate(
            |x| (1.0 + x * x).powi(-2),
            Domain::HalfLineDown(0.0),
            &spec(),
        )
        .unwrap();
        assert!((up.value - down.value).abs() < 1e-12);
        assert!((up.value - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn exp_map_on_exponential_tail() {
        let s = QuadratureSpec {
            tail_map: TailMap::Exp,
            ..spec()
        };
        let q = integrate(|x| (-x).exp(), Domain::HalfLineUp(0.0), &s).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn breaks_handle_discontinuous_integrand() {
        // Step integrand: 0 below 1, 2 x^-3 above; breakpoint right at the jump.
        let f = |x: f64| if x >= 1.0 { 2.0 * x.powi(-3) } else { 0.0 };
        let q = integrate_with_breaks(&f, Domain::Line, &[1.0], &spec()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9, "got {}", q.value);
    }

    #[test]
    fn error_estimate_is_honest() {
        let q = integrate(|x| x.sin(), Domain::Interval(0.0, PI), &spec()).unwrap();
        assert!((q.value - 2.0).abs() <= q.err.max(1e-12));
    }

    #[test]
    fn nonconvergence_is_reported() {
        let s = QuadratureSpec {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_subdivisions: 4,
            ..spec()
        };
        let r = integrate(|x| 1.0 / x.abs().sqrt(), Domain::Interval(-1.0, 1.0), &s);
        assert!(matches!(r, Err(QuadError::NonConvergence { .. })));
    }

    #[test]
    fn iterated_2d_gaussian() {
        let q = integrate_2d(|x, y| (-0.5 * (x * x + y * y)).exp() / (2.0 * PI), &spec()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "got {}", q.value);
    }
}
