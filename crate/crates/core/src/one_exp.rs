//! Worst-case `E(X − q)_+` over distributions on `[0, ∞)` with given mean `M1`
//! and exponential moment `Me = E e^{tX}`.
//!
//! Scaling `X` by `t` gives the unit-rate problem with mean `M̂1 = t M1` and
//! threshold `q̂ = t q`. With `v₁ > M̂1` the positive solution of
//! `e^{v} = ((Me − 1)/M̂1) v + 1`, the optimum sits on `{0, v₁}` when
//! `q̂ ≤ v₁ + M̂1/(Me − 1) − 1`, and on `{u, v₂}` with `0 < u < min{M̂1, q̂}`
//! a root of [`phi`] otherwise.

use serde::Serialize;

use crate::error::{GmpError, Result};
use crate::gmp::{
    verify_optimality, DiscreteDistribution, DualCertificate, GmpInstance, MomentFunction, Sense,
    ToleranceSet, VerificationReport,
};
use crate::lambertw::lambert_w_minus1;
use crate::rootfind::bisect;

/// Largest scaled exponent accepted before `e^x` gets close to overflow.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneExpInstance {
    pub m1: f64,
    pub me: f64,
    pub t: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OneExpBranch {
    Boundary,
    Interior,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneExpReport {
    pub value: f64,
    pub dist: DiscreteDistribution,
    pub cert: DualCertificate,
    pub branch: OneExpBranch,
    /// `v₁` in scaled units.
    pub v1: f64,
    /// Root `u` of Φ in scaled units (interior branch only).
    pub root: Option<f64>,
    pub bisect_iters: usize,
    pub verification: VerificationReport,
}

impl OneExpInstance {
    pub fn new(m1: f64, me: f64, t: f64, q: f64) -> Result<Self> {
        for (name, v) in [("M1", m1), ("Me", me), ("t", t), ("q", q)] {
            if !v.is_finite() {
                return Err(GmpError::NonFinite(format!("{name} = {v}")));
            }
        }
        if m1 <= 0.0 {
            return Err(GmpError::Domain(format!("M1 must be positive, got {m1}")));
        }
        if t <= 0.0 {
            return Err(GmpError::Domain(format!("t must be positive, got {t}")));
        }
        if q <= 0.0 {
            return Err(GmpError::Domain(format!("q must be positive, got {q}")));
        }
        if t * q > MAX_EXPONENT {
            return Err(GmpError::Range(format!(
                "t*q = {} exceeds {MAX_EXPONENT}; e^(tq) would overflow",
                t * q
            )));
        }
        if !(me > (t * m1).exp()) {
            return Err(GmpError::Infeasible(format!(
                "need Me > e^(t*M1), got Me = {me} and e^(t*M1) = {}",
                (t * m1).exp()
            )));
        }
        Ok(Self { m1, me, t, q })
    }

    /// `t M1`
    pub fn m1hat(&self) -> f64 {
        self.t * self.m1
    }

    /// `t q`
    pub fn qhat(&self) -> f64 {
        self.t * self.q
    }

    /// The moment problem this instance describes. The scan range is capped
    /// so that `e^{tx}` stays finite.
    pub fn gmp(&self, support_max: f64) -> GmpInstance {
        let wide = (10.0 * support_max).max(10.0 * self.q).max(10.0 * self.m1);
        let cap = (705.0 / self.t).max(support_max);
        GmpInstance {
            g: MomentFunction::Hinge(self.q),
            hs: vec![
                MomentFunction::One,
                MomentFunction::Power(1.0),
                MomentFunction::Exp(self.t),
            ],
            ms: vec![1.0, self.m1, self.me],
            sense: Sense::Max,
            support_hi: wide.min(cap),
            offset: 0.0,
        }
    }
}

/// Positive solution `v₁ > M̂1` of `e^{v} = ((Me − 1)/M̂1) v + 1`, via
/// `v₁ = −W₋₁(−c e^{−c}) − c` with `c = M̂1/(Me − 1)`.
pub fn compute_v1(m1hat: f64, me: f64) -> Result<f64> {
    let c = m1hat / (me - 1.0);
    let w = lambert_w_minus1(-c * (-c).exp())?;
    Ok(-w.w - c)
}

/// Largest scaled `q̂` served by the boundary branch: `v₁ + M̂1/(Me − 1) − 1`.
pub fn boundary_threshold_scaled(m1hat: f64, me: f64) -> Result<f64> {
    Ok(compute_v1(m1hat, me)? + m1hat / (me - 1.0) - 1.0)
}

/// Φ on the unit-rate instance:
///
/// ```text
/// Φ(y) = ((Me − e^y)/(M̂1 − y))(q̂ + 1 − M̂1) − e^y − e^{q̂ + 1 − e^y (M̂1 − y)/(Me − e^y)} + Me
/// ```
///
/// evaluated as `K (q̂ + 1 − y)/s − e^{v₂}` with `s = M̂1 − y`, `K = Me − e^y`.
pub fn phi(y: f64, m1hat: f64, me: f64, qhat: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(GmpError::Domain(format!("phi requires y >= 0, got {y}")));
    }
    let s = m1hat - y;
    if s == 0.0 {
        return Err(GmpError::NonFinite(format!("phi has a pole at y = {y}")));
    }
    let k = me - y.exp();
    let v2 = qhat + 1.0 - y.exp() * s / k;
    let out = k * (qhat + 1.0 - y) / s - v2.exp();
    if out.is_finite() {
        Ok(out)
    } else {
        Err(GmpError::NonFinite(format!("phi({y}) = {out}")))
    }
}

/// `ln` of the first term of Φ minus the exponent of the second, as a
/// function of `ℓ = ln(M̂1 − y)`. Has the sign of Φ for `0 ≤ y < min{M̂1, q̂ + 1}`
/// and stays finite when `M̂1 − y` is far below machine precision.
fn phi_log_sign(ell: f64, m1hat: f64, me: f64, qhat: f64) -> f64 {
    let s = ell.exp();
    let y = (m1hat - s).max(0.0);
    let ey = y.exp();
    let k = me - ey;
    k.ln() + (qhat + 1.0 - y).ln() - ell - qhat - 1.0 + ey * s / k
}

/// Bracket for the interior root in `ℓ = ln(M̂1 − y)`. The left end has
/// Φ > 0 and the right end (`y = 0`) has Φ < 0.
pub fn phi_bracket(m1hat: f64, me: f64, qhat: f64) -> Result<(f64, f64)> {
    let f = |ell: f64| phi_log_sign(ell, m1hat, me, qhat);
    let ell_hi = m1hat.ln();
    let f_hi = f(ell_hi);
    if !(f_hi < 0.0) {
        return Err(GmpError::RootBracket(format!(
            "phi(0) = {f_hi:e} is not negative"
        )));
    }
    let ell_lo = if qhat < m1hat {
        (m1hat - qhat).ln()
    } else {
        // Φ → +∞ as y ↑ M̂1; start from the leading-order root estimate
        let k = me - m1hat.exp();
        let mut ell = k.ln() + (qhat + 1.0 - m1hat).ln() - qhat - 2.0;
        let mut step = 1.0;
        while !(f(ell) > 0.0) {
            ell -= step;
            step *= 2.0;
            if ell < -2000.0 {
                return Err(GmpError::RootBracket(
                    "phi stays negative approaching M1".into(),
                ));
            }
        }
        ell
    };
    let f_lo = f(ell_lo);
    if !(f_lo > 0.0) {
        return Err(GmpError::RootBracket(format!(
            "phi at the right end of the bracket is {f_lo:e}"
        )));
    }
    Ok((ell_lo, ell_hi))
}

/// Bisection tolerance in `ℓ` that keeps the root within `eps` in `y`.
pub fn log_gap_tolerance(eps: f64, m1hat: f64) -> f64 {
    eps / m1hat.max(1.0)
}

pub fn solve_1e(inst: &OneExpInstance, eps: f64) -> Result<OneExpReport> {
    solve_1e_with(inst, eps, &ToleranceSet::default())
}

pub fn solve_1e_with(inst: &OneExpInstance, eps: f64, tol: &ToleranceSet) -> Result<OneExpReport> {
    if !(eps > 0.0) {
        return Err(GmpError::Domain(format!("eps must be positive, got {eps}")));
    }
    let inst = OneExpInstance::new(inst.m1, inst.me, inst.t, inst.q)?;
    let (t, me) = (inst.t, inst.me);
    let m1h = inst.m1hat();
    let qh = inst.qhat();
    let v1 = compute_v1(m1h, me)?;
    if v1 > MAX_EXPONENT {
        return Err(GmpError::Range(format!(
            "boundary support v1 = {v1} is too large for double precision"
        )));
    }
    let c = m1h / (me - 1.0);

    let (value, dist, zhat, branch, root, iters) = if qh <= v1 + c - 1.0 {
        let dist = DiscreteDistribution::new([(0.0, 1.0 - m1h / v1), (v1 / t, m1h / v1)])?;
        let e1 = v1.exp();
        let den = e1 * (v1 - 1.0) + 1.0;
        let zhat = [-qh / den, (e1 * (v1 - 1.0 - qh) + 1.0) / den, qh / den];
        (
            m1h * (1.0 - qh / v1) / t,
            dist,
            zhat,
            OneExpBranch::Boundary,
            None,
            0,
        )
    } else {
        let f = |ell: f64| phi_log_sign(ell, m1h, me, qh);
        let (ell_lo, ell_hi) = phi_bracket(m1h, me, qh)?;
        let r = bisect(f, ell_lo, ell_hi, log_gap_tolerance(eps, m1h))?;
        let s = r.root.exp();
        let u = (m1h - s).max(0.0);
        let eu = u.exp();
        let k = me - eu;
        let v2 = qh + 1.0 - eu * s / k;
        let span = v2 - u;
        let dist = DiscreteDistribution::new([(u / t, (v2 - m1h) / span), (v2 / t, s / span)])?;
        let w = v2.exp() - eu;
        let zhat = [(u - 1.0) * eu / w, -eu / w, 1.0 / w];
        let value = (v2 - qh) * s / (span * t);
        (
            value,
            dist,
            zhat,
            OneExpBranch::Interior,
            Some(u),
            r.iterations,
        )
    };

    let cert = DualCertificate::new(vec![zhat[0] / t, zhat[1], zhat[2] / t])?;
    let verification = verify_optimality(&inst.gmp(dist.max_support()), &dist, &cert, tol)?;
    Ok(OneExpReport {
        value,
        dist,
        cert,
        branch,
        v1,
        root,
        bisect_iters: iters,
        verification,
    })
}

/// Optimal values along an ascending grid of order quantities.
pub fn value_curve_1e(
    m1: f64,
    me: f64,
    t: f64,
    q_grid: &[f64],
    eps: f64,
) -> Result<Vec<(f64, f64)>> {
    q_grid
        .iter()
        .map(|&q| Ok((q, solve_1e(&OneExpInstance::new(m1, me, t, q)?, eps)?.value)))
        .collect()
}
