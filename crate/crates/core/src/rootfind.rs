//! Scalar bisection, golden-section search and bracket doubling.

use serde::Serialize;

use crate::error::{GmpError, Result};

/// `|f(c)|` at or below this counts as an exact root.
pub const ZERO_TOL: f64 = 1e-300;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const MAX_DOUBLINGS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BisectStatus {
    /// `f` vanished (to within [`ZERO_TOL`]) at the returned point.
    ExactZero,
    /// The bracket half-width fell below `eps`.
    ToleranceReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectResult {
    pub root: f64,
    pub iterations: usize,
    /// Half-width of the final bracket.
    pub width: f64,
    pub status: BisectStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenResult {
    pub minimizer: f64,
    pub iterations: usize,
    pub final_interval: (f64, f64),
}

fn is_zero(v: f64) -> bool {
    v.abs() <= ZERO_TOL
}

fn finite(v: f64, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GmpError::NonFinite(format!("f({at}) = {v}")))
    }
}

/// Upper bound on bisection iterations for a bracket of width `w`.
pub fn bisect_iteration_bound(w: f64, eps: f64) -> usize {
    (w / eps).log2().ceil().max(0.0) as usize + 2
}

/// Bisection on `(a, b]` returning a point within `eps` of a root.
///
/// The usual requirement is a sign change between `f(a)` and `f(b)`. A root at
/// the left endpoint is also accepted provided `f` takes the opposite sign of
/// `f(b)` just to the right of `a`; the sign at `a + δ`, with
/// `δ = min(eps, (b − a)·1e-6)`, then stands in for the sign at `a`. In either
/// case the returned root is strictly greater than `a`.
///
/// `f(a)` may be infinite. `f` must be finite on `(a, b]`.
pub fn bisect<F>(mut f: F, a: f64, b: f64, eps: f64) -> Result<BisectResult>
where
    F: FnMut(f64) -> f64,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(GmpError::Domain(format!("bisection interval ({a}, {b})")));
    }
    if !(eps > 0.0) {
        return Err(GmpError::Domain(format!("bisection tolerance {eps}")));
    }

    let fb = finite(f(b), b)?;
    if is_zero(fb) {
        return Ok(BisectResult {
            root: b,
            iterations: 0,
            width: 0.0,
            status: BisectStatus::ExactZero,
        });
    }
    let fa = f(a);
    if fa.is_nan() {
        return Err(GmpError::NonFinite(format!("f({a}) = NaN")));
    }

    let left_sign = if is_zero(fa) {
        let delta = eps.min((b - a) * 1e-6);
        let x = a + delta;
        let fx = finite(f(x), x)?;
        if is_zero(fx) {
            return Ok(BisectResult {
                root: x,
                iterations: 0,
                width: 0.0,
                status: BisectStatus::ExactZero,
            });
        }
        if fx.signum() == fb.signum() {
            return Err(GmpError::Bracket { fa: fx, fb });
        }
        fx.signum()
    } else {
        if fa.signum() == fb.signum() {
            return Err(GmpError::Bracket { fa, fb });
        }
        fa.signum()
    };

    let (mut lo, mut hi) = (a, b);
    let mut iterations = 0;
    while (hi - lo) / 2.0 > eps {
        let c = lo + (hi - lo) / 2.0;
        if c <= lo || c >= hi {
            break;
        }
        iterations += 1;
        let fc = finite(f(c), c)?;
        if is_zero(fc) {
            return Ok(BisectResult {
                root: c,
                iterations,
                width: (hi - lo) / 2.0,
                status: BisectStatus::ExactZero,
            });
        }
        if fc.signum() == left_sign {
            lo = c;
        } else {
            hi = c;
        }
    }
    let mid = lo + (hi - lo) / 2.0;
    Ok(BisectResult {
        root: if mid > a { mid } else { hi },
        iterations,
        width: (hi - lo) / 2.0,
        status: BisectStatus::ToleranceReached,
    })
}

/// Golden-section search for the minimizer of a unimodal `f` on `[a, b]`.
///
/// On a tie `f(x1) = f(x2)` the right subinterval is dropped. Stops once the
/// half-width of the interval is at most `eps` and returns its midpoint.
pub fn golden_section<F>(mut f: F, a: f64, b: f64, eps: f64) -> Result<GoldenResult>
where
    F: FnMut(f64) -> f64,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(GmpError::Domain(format!("search interval [{a}, {b}]")));
    }
    if !(eps > 0.0) {
        return Err(GmpError::Domain(format!("search tolerance {eps}")));
    }
    let (mut a, mut b) = (a, b);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = finite(f(x1), x1)?;
    let mut f2 = finite(f(x2), x2)?;
    let mut iterations = 0;
    while (b - a) / 2.0 > eps {
        let width = b - a;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = finite(f(x1), x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = finite(f(x2), x2)?;
        }
        iterations += 1;
        if b - a >= width {
            break;
        }
    }
    Ok(GoldenResult {
        minimizer: a + (b - a) / 2.0,
        iterations,
        final_interval: (a, b),
    })
}

/// Finds `b > a` with `f(a) < f(b)`, starting from `b = max(1, 2a)` and doubling.
///
/// For convex `f` with a minimizer at or beyond `a`, the minimizer then lies in `[a, b]`.
pub fn expand_bracket<F>(mut f: F, a: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let fa = finite(f(a), a)?;
    let mut b = (2.0 * a).max(1.0);
    for _ in 0..MAX_DOUBLINGS {
        let fb = f(b);
        if fb.is_nan() {
            return Err(GmpError::NonFinite(format!("f({b}) = NaN")));
        }
        if fb > fa {
            return Ok((a, b));
        }
        b *= 2.0;
    }
    Err(GmpError::Expansion(MAX_DOUBLINGS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let r = bisect(|x| x - 1.0, 0.0, 2.0, 1e-10).unwrap();
        // midpoint of (0, 2) is exactly 1
        assert_eq!(r.status, BisectStatus::ExactZero);
        assert_eq!(r.root, 1.0);

        let r = bisect(|x| x - 1.0, 0.0, 3.0, 1e-10).unwrap();
        assert!((r.root - 1.0).abs() <= 1e-10);
        assert!(r.iterations <= bisect_iteration_bound(3.0, 1e-10));
        assert!(r.width <= 1e-10);
    }

    #[test]
    fn same_sign_is_a_bracket_error() {
        let err = bisect(|x| x * x + 1.0, -1.0, 2.0, 1e-8).unwrap_err();
        assert!(matches!(err, GmpError::Bracket { .. }));
    }

    #[test]
    fn non_finite_inside_bracket() {
        let err = bisect(
            |x| {
                if x > 0.4 && x < 0.6 {
                    f64::NAN
                } else {
                    x - 0.5
                }
            },
            0.0,
            1.0,
            1e-9,
        );
        assert!(matches!(err, Err(GmpError::NonFinite(_))));
    }

    #[test]
    fn left_endpoint_root_is_skipped() {
        // zero at a = 1, negative on (1, 2.5), positive at b
        let f = |x: f64| (x - 1.0) * (x - 2.5);
        let r = bisect(f, 1.0, 4.0, 1e-12).unwrap();
        assert!(r.root > 1.0);
        assert!((r.root - 2.5).abs() <= 1e-12);
    }

    #[test]
    fn left_endpoint_root_with_wrong_slope() {
        // zero at a, positive right of a and at b: no sign change to follow
        let err = bisect(|x: f64| x * (x + 1.0), 0.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, GmpError::Bracket { .. }));
    }

    #[test]
    fn infinite_left_value_is_allowed() {
        let r = bisect(|x: f64| 1.0 / x - 2.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.root - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn golden_quadratic_and_v_shape() {
        let g = golden_section(|q| (q - 3.0) * (q - 3.0), 0.0, 10.0, 1e-8).unwrap();
        assert!((g.minimizer - 3.0).abs() <= 1e-8);
        let (lo, hi) = g.final_interval;
        assert!(hi - lo <= 2e-8);

        let g = golden_section(|q: f64| (q - 2.0).abs(), 0.0, 5.0, 1e-6).unwrap();
        assert!((g.minimizer - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn golden_uses_one_evaluation_per_iteration() {
        let mut calls = 0;
        let g = golden_section(
            |q| {
                calls += 1;
                (q - 0.3).powi(2)
            },
            0.0,
            1.0,
            1e-9,
        )
        .unwrap();
        assert_eq!(calls, g.iterations + 2);
    }

    #[test]
    fn golden_shrinks_by_the_golden_ratio() {
        let g = golden_section(|q| q * q, -1.0, 1.0, 1e-3).unwrap();
        let (lo, hi) = g.final_interval;
        let expected = 2.0 * GOLDEN.powi(g.iterations as i32);
        assert!(((hi - lo) - expected).abs() <= 1e-12);
    }

    #[test]
    fn expand_bracket_examples() {
        assert_eq!(
            expand_bracket(|q| (q - 3.0) * (q - 3.0), 0.0).unwrap(),
            (0.0, 8.0)
        );
        assert_eq!(expand_bracket(|q| q * q, 0.0).unwrap(), (0.0, 1.0));
        assert_eq!(
            expand_bracket(|q| -q, 0.0).unwrap_err(),
            GmpError::Expansion(MAX_DOUBLINGS)
        );
    }
}
