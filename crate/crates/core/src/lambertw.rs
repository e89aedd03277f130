//! Real branches `W₀` and `W₋₁` of the Lambert W function.

use serde::Serialize;

use crate::error::{GmpError, Result};
use crate::rootfind::bisect;

/// `1/e` split into a double and its rounding error.
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// Arguments this close to `−1/e` return `w = −1` directly. Also admits the
/// double nearest `−1/e`, which lies just below it.
const BRANCH_TOL: f64 = 1e-16;

const MAX_HALLEY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WValue {
    pub w: f64,
    /// `|w·e^w − x|`
    pub residual: f64,
}

impl WValue {
    fn new(w: f64, x: f64) -> Self {
        Self {
            w,
            residual: (w * w.exp() - x).abs(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Branch {
    Principal,
    Lower,
}

/// `x + 1/e` with the rounding error of `1/e` restored.
fn dist_to_branch_point(x: f64) -> f64 {
    (x + INV_E_HI) + INV_E_LO
}

/// Series around the branch point in `p = ±√(2(e·x + 1))`.
fn branch_series(p: f64) -> f64 {
    -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
}

fn initial_guess(x: f64, branch: Branch) -> f64 {
    let d = dist_to_branch_point(x);
    match branch {
        Branch::Lower if x < -0.25 => branch_series(-(2.0 * std::f64::consts::E * d).sqrt()),
        Branch::Lower => {
            let l1 = (-x).ln();
            let l2 = (-l1).ln();
            l1 - l2 + l2 / l1
        }
        Branch::Principal if x < -0.25 => branch_series((2.0 * std::f64::consts::E * d).sqrt()),
        Branch::Principal if x <= 3.0 => x.ln_1p() * 0.8,
        Branch::Principal => {
            let l1 = x.ln();
            let l2 = l1.ln();
            l1 - l2 + l2 / l1
        }
    }
}

fn halley(x: f64, mut w: f64) -> Option<f64> {
    for _ in 0..MAX_HALLEY {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            return Some(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            return None;
        }
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            return Some(w);
        }
    }
    None
}

fn solve(x: f64, branch: Branch) -> Result<WValue> {
    if dist_to_branch_point(x).abs() <= BRANCH_TOL {
        return Ok(WValue::new(-1.0, x));
    }
    let guess = initial_guess(x, branch);
    let w = match halley(x, guess) {
        Some(w) if (branch == Branch::Lower) == (w <= -1.0) || w == -1.0 => w,
        _ => fallback(x, branch)?,
    };
    Ok(WValue::new(w, x))
}

/// Bisection on `w·e^w − x`, monotone on either side of `w = −1`.
fn fallback(x: f64, branch: Branch) -> Result<f64> {
    let g = |w: f64| w * w.exp() - x;
    let (lo, hi) = match branch {
        Branch::Lower => {
            let mut lo = -2.0;
            while g(lo) <= 0.0 {
                lo *= 2.0;
                if lo < -1e4 {
                    return Err(GmpError::NonFinite(format!("W_-1({x}) bracket")));
                }
            }
            (lo, -1.0)
        }
        Branch::Principal => {
            let mut hi = 1.0;
            while g(hi) <= 0.0 {
                hi *= 2.0;
                if hi > 1e3 {
                    return Err(GmpError::NonFinite(format!("W_0({x}) bracket")));
                }
            }
            (-1.0, hi)
        }
    };
    let r = bisect(g, lo, hi, 1e-16 * lo.abs().max(hi.abs()))?;
    Ok(r.root)
}

/// Lower branch `W₋₁(x)` for `x ∈ [−1/e, 0)`, with `w ≤ −1`.
pub fn lambert_w_minus1(x: f64) -> Result<WValue> {
    if !(x.is_finite() && x < 0.0 && dist_to_branch_point(x) >= -BRANCH_TOL) {
        return Err(GmpError::Domain(format!(
            "W_-1 requires x in [-1/e, 0), got {x}"
        )));
    }
    solve(x, Branch::Lower)
}

/// Principal branch `W₀(x)` for `x ≥ −1/e`, with `w ≥ −1`.
pub fn lambert_w_0(x: f64) -> Result<WValue> {
    if !(x.is_finite() && dist_to_branch_point(x) >= -BRANCH_TOL) {
        return Err(GmpError::Domain(format!("W_0 requires x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(WValue::new(0.0, x));
    }
    solve(x, Branch::Principal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn oracle_minus1(x: f64) -> f64 {
        // plain bisection, independent of the Halley path
        let (mut lo, mut hi) = (-50.0_f64, -1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() - x > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point() {
        assert_eq!(lambert_w_minus1(-1.0 / E).unwrap().w, -1.0);
        assert_eq!(lambert_w_0(-1.0 / E).unwrap().w, -1.0);
    }

    #[test]
    fn minus_one_examples() {
        let w = lambert_w_minus1(-0.1).unwrap();
        assert!((w.w - oracle_minus1(-0.1)).abs() < 1e-12);
        assert!((w.w + 3.577152).abs() < 1e-6);
        assert!(w.residual <= 1e-12);

        let x = -2.0 * (-2.0_f64).exp();
        let w = lambert_w_minus1(x).unwrap();
        assert!((w.w + 2.0).abs() < 1e-14);
    }

    #[test]
    fn principal_examples() {
        assert_eq!(lambert_w_0(0.0).unwrap().w, 0.0);
        assert!((lambert_w_0(E).unwrap().w - 1.0).abs() < 1e-15);
        let w = lambert_w_0(1e6).unwrap();
        assert!(w.residual <= 1e-12 * 1e6);
    }

    #[test]
    fn domain_errors() {
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(-0.5).is_err());
        assert!(lambert_w_minus1(0.3).is_err());
        assert!(lambert_w_0(-0.4).is_err());
        assert!(lambert_w_0(f64::NAN).is_err());
    }

    #[test]
    fn near_branch_point_stays_on_branch() {
        for k in 1..15 {
            let x = -1.0 / E + 10f64.powi(-k);
            let lower = lambert_w_minus1(x).unwrap();
            let upper = lambert_w_0(x).unwrap();
            assert!(lower.w <= -1.0 && upper.w >= -1.0, "{x}");
            assert!(lower.residual <= 1e-12 && upper.residual <= 1e-12);
        }
    }

    #[test]
    fn tiny_arguments() {
        for x in [-1e-300, -1e-100, -1e-10] {
            let w = lambert_w_minus1(x).unwrap();
            assert!(w.w < -1.0);
            assert!(w.residual <= 1e-12);
            assert!(((w.w * w.w.exp()) / x - 1.0).abs() < 1e-12);
        }
    }
}
