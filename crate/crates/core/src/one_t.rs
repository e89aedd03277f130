//! Worst-case `E(X − q)_+` over distributions on `[0, ∞)` with given mean `M1`
//! and `t`-th moment `Mt`.
//!
//! After scaling to unit mean (`M̂ = Mt / M1^t`, `q̂ = q / M1`) and writing
//! `a = M̂^{1/(t−1)}`, the optimum is supported on `{0, a}` when
//! `q̂ ≤ (t−1)/t · a`, and on `{u, v}` with `0 < u < 1 < v` otherwise, where
//! `v` is a root of [`theta`] in `(max{a, q̂}, t q̂/(t−1))`.

use serde::Serialize;

use crate::error::{GmpError, Result};
use crate::gmp::{
    verify_optimality, DiscreteDistribution, DualCertificate, GmpInstance, MomentFunction, Sense,
    ToleranceSet, VerificationReport,
};
use crate::rootfind::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneTInstance {
    pub m1: f64,
    pub mt: f64,
    pub t: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OneTBranch {
    Boundary,
    Interior,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneTReport {
    pub value: f64,
    pub dist: DiscreteDistribution,
    pub cert: DualCertificate,
    pub branch: OneTBranch,
    /// Root `v` of Θ in scaled units (interior branch only).
    pub root: Option<f64>,
    pub bisect_iters: usize,
    pub verification: VerificationReport,
}

impl OneTInstance {
    pub fn new(m1: f64, mt: f64, t: f64, q: f64) -> Result<Self> {
        for (name, v) in [("M1", m1), ("Mt", mt), ("t", t), ("q", q)] {
            if !v.is_finite() {
                return Err(GmpError::NonFinite(format!("{name} = {v}")));
            }
        }
        if m1 <= 0.0 {
            return Err(GmpError::Domain(format!("M1 must be positive, got {m1}")));
        }
        if t <= 1.0 {
            return Err(GmpError::Domain(format!("t must exceed 1, got {t}")));
        }
        if q <= 0.0 {
            return Err(GmpError::Domain(format!("q must be positive, got {q}")));
        }
        let inst = Self { m1, mt, t, q };
        if !(inst.mhat() > 1.0) {
            return Err(GmpError::Infeasible(format!(
                "need Mt > M1^t, got Mt = {mt} and M1^t = {}",
                m1.powf(t)
            )));
        }
        Ok(inst)
    }

    /// `Mt / M1^t`
    pub fn mhat(&self) -> f64 {
        self.mt / self.m1.powf(self.t)
    }

    /// `q / M1`
    pub fn qhat(&self) -> f64 {
        self.q / self.m1
    }

    /// `M̂^{1/(t−1)}`, the support point of the boundary branch in scaled units.
    pub fn anchor(&self) -> f64 {
        self.mhat().powf(1.0 / (self.t - 1.0))
    }

    /// The moment problem this instance describes, with a scan range wide
    /// enough to cover `support`.
    pub fn gmp(&self, support_max: f64) -> GmpInstance {
        let hi = (10.0 * support_max).max(10.0 * self.q).max(10.0 * self.m1);
        GmpInstance {
            g: MomentFunction::Hinge(self.q),
            hs: vec![
                MomentFunction::One,
                MomentFunction::Power(1.0),
                MomentFunction::Power(self.t),
            ],
            ms: vec![1.0, self.m1, self.mt],
            sense: Sense::Max,
            support_hi: hi,
            offset: 0.0,
        }
    }
}

/// `Mt/M1^t · (y^{t−1}/M̂ − 1) = y^{t−1} − M̂`, accurate near `y = M̂^{1/(t−1)}`.
fn gap(y: f64, mhat: f64, t: f64) -> f64 {
    mhat * ((t - 1.0) * y.ln() - mhat.ln()).exp_m1()
}

fn pow_signed(base: f64, t: f64) -> f64 {
    if t.fract() == 0.0 && t.abs() < i32::MAX as f64 {
        base.powi(t as i32)
    } else {
        base.powf(t)
    }
}

/// Θ on the unit-mean instance with `t`-th moment `mhat` and threshold `qhat`:
///
/// ```text
/// Θ(y) = (y^t − M)/(y − 1) · (1 − c (y^{t−1} − M)/(y^t − M))
///        + (c (y^{t−1} − M)/(y^t − M))^t − M,      c = t q/(t − 1).
/// ```
///
/// Evaluated in the algebraically equal form `D (y − c)/(y − 1) + (c D/(y^t − M))^t`
/// with `D = y^{t−1} − M`.
pub fn theta(y: f64, mhat: f64, t: f64, qhat: f64) -> Result<f64> {
    if !(y > 1.0) {
        return Err(GmpError::Domain(format!("theta requires y > 1, got {y}")));
    }
    let c = t * qhat / (t - 1.0);
    let mut d = gap(y, mhat, t);
    if d < 0.0 && d > -8.0 * f64::EPSILON * mhat {
        // rounding noise at y = M^{1/(t−1)}
        d = 0.0;
    }
    if d < 0.0 && t.fract() != 0.0 {
        return Err(GmpError::Domain(format!(
            "theta is not real below M^(1/(t-1)) for fractional t, got y = {y}"
        )));
    }
    let s = y * d + mhat * (y - 1.0);
    if s == 0.0 {
        return Err(GmpError::NonFinite(format!("y^t - M vanishes at y = {y}")));
    }
    let out = d * (y - c) / (y - 1.0) + pow_signed(c * d / s, t);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(GmpError::NonFinite(format!("theta({y}) = {out}")))
    }
}

/// `Θ(y) / (y^{t−1} − M)`. Same sign as Θ for `y > M^{1/(t−1)}`, and strictly
/// negative at `y = M^{1/(t−1)}` on the interior branch, where Θ itself vanishes.
fn theta_reduced(y: f64, mhat: f64, t: f64, c: f64) -> f64 {
    let d = gap(y, mhat, t).max(0.0);
    let s = y * d + mhat * (y - 1.0);
    (y - c) / (y - 1.0) + c.powf(t) * d.powf(t - 1.0) / s.powf(t)
}

/// `M1 · (t−1)/t · (Mt/M1^t)^{1/(t−1)}`: the largest `q` served by the boundary branch.
pub fn boundary_threshold(inst: &OneTInstance) -> f64 {
    inst.m1 * (inst.t - 1.0) / inst.t * inst.anchor()
}

pub fn solve_1t(inst: &OneTInstance, eps: f64) -> Result<OneTReport> {
    solve_1t_with(inst, eps, &ToleranceSet::default())
}

pub fn solve_1t_with(inst: &OneTInstance, eps: f64, tol: &ToleranceSet) -> Result<OneTReport> {
    if !(eps > 0.0) {
        return Err(GmpError::Domain(format!("eps must be positive, got {eps}")));
    }
    // re-validate in case the struct was built by hand
    let inst = OneTInstance::new(inst.m1, inst.mt, inst.t, inst.q)?;
    let (m1, t) = (inst.m1, inst.t);
    let mhat = inst.mhat();
    let qhat = inst.qhat();
    let a = inst.anchor();
    let c = t * qhat / (t - 1.0);

    let (value, dist, zhat, branch, root, iters) = if c <= a {
        let dist = DiscreteDistribution::new([(0.0, 1.0 - 1.0 / a), (m1 * a, 1.0 / a)])?;
        let zhat = [0.0, 1.0 - c / a, qhat / ((t - 1.0) * a.powf(t))];
        (
            m1 * (1.0 - qhat / a),
            dist,
            zhat,
            OneTBranch::Boundary,
            None,
            0,
        )
    } else {
        let lo = a.max(qhat);
        // at the anchor D vanishes exactly; evaluating it there would only add rounding noise
        let f = |y: f64| {
            if y <= a {
                (y - c) / (y - 1.0)
            } else {
                theta_reduced(y, mhat, t, c)
            }
        };
        let (flo, fhi) = (f(lo), f(c));
        if !(flo < 0.0 && fhi >= 0.0) {
            return Err(GmpError::RootBracket(format!(
                "theta on ({lo}, {c}) has end signs {flo:e}, {fhi:e}"
            )));
        }
        let r = bisect(f, lo, c, eps)?;
        let v = r.root;
        let d = gap(v, mhat, t);
        let s = v * d + mhat * (v - 1.0);
        let u = c * d / s;
        let pu = (v - 1.0) / (v - u);
        let pv = (1.0 - u) / (v - u);
        let dist = DiscreteDistribution::new([(m1 * u, pu), (m1 * v, pv)])?;
        let w = v.powf(t - 1.0) - u.powf(t - 1.0);
        let zhat = [
            (t - 1.0) * u.powf(t) / (t * w),
            -u.powf(t - 1.0) / w,
            1.0 / (t * w),
        ];
        let value = m1 * (v - qhat) * (1.0 - u) / (v - u);
        (
            value,
            dist,
            zhat,
            OneTBranch::Interior,
            Some(v),
            r.iterations,
        )
    };

    let cert = DualCertificate::new(vec![m1 * zhat[0], zhat[1], zhat[2] * m1.powf(1.0 - t)])?;
    let verification = verify_optimality(&inst.gmp(dist.max_support()), &dist, &cert, tol)?;
    Ok(OneTReport {
        value,
        dist,
        cert,
        branch,
        root,
        bisect_iters: iters,
        verification,
    })
}

/// Optimal values along an ascending grid of order quantities.
pub fn value_curve_1t(
    m1: f64,
    mt: f64,
    t: f64,
    q_grid: &[f64],
    eps: f64,
) -> Result<Vec<(f64, f64)>> {
    q_grid
        .iter()
        .map(|&q| Ok((q, solve_1t(&OneTInstance::new(m1, mt, t, q)?, eps)?.value)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scarf(mu: f64, var: f64, q: f64) -> f64 {
        0.5 * ((var + (q - mu).powi(2)).sqrt() - (q - mu))
    }

    #[test]
    fn boundary_example() {
        let r = solve_1t(&OneTInstance::new(1.0, 4.0, 2.0, 1.0).unwrap(), 1e-12).unwrap();
        assert_eq!(r.branch, OneTBranch::Boundary);
        assert!((r.value - 0.75).abs() < 1e-15);
        let atoms = r.dist.atoms();
        assert_eq!((atoms[0].x, atoms[1].x), (0.0, 4.0));
        assert!((atoms[0].p - 0.75).abs() < 1e-15);
        assert_eq!(r.cert.z, vec![0.0, 0.5, 1.0 / 16.0]);
        assert!(r.verification.pass);
        assert!(r.root.is_none());
    }

    #[test]
    fn interior_example_matches_mean_variance_bound() {
        let r = solve_1t(&OneTInstance::new(1.0, 2.0, 2.0, 6.0).unwrap(), 1e-12).unwrap();
        assert_eq!(r.branch, OneTBranch::Interior);
        let expected = (26f64.sqrt() - 5.0) / 2.0;
        assert!((r.value - expected).abs() < 1e-10, "{}", r.value);
        assert!((r.value - scarf(1.0, 1.0, 6.0)).abs() < 1e-10);
        let v = r.root.unwrap();
        assert!(v > 6.0 && v < 12.0);
        assert!(r.verification.pass, "{:?}", r.verification);
    }

    #[test]
    fn theta_examples() {
        // t = 2, M = 2, q = 6, y = 7: c = 12, D = 5, y^2 - M = 47
        let by_hand = (47.0 / 6.0) * (1.0 - 12.0 * 5.0 / 47.0) + (60.0_f64 / 47.0).powi(2) - 2.0;
        let th = theta(7.0, 2.0, 2.0, 6.0).unwrap();
        assert!((th - by_hand).abs() < 1e-13);
        assert!((th + 2.537).abs() < 1e-3);

        // positive at the right end of the bracket
        assert!(theta(12.0, 2.0, 2.0, 6.0).unwrap() > 0.0);
        // vanishes at M^{1/(t-1)}
        assert!(theta(2.0, 2.0, 2.0, 1.5).unwrap().abs() < 1e-15);
        assert!(matches!(
            theta(1.0, 2.0, 2.0, 1.5),
            Err(GmpError::Domain(_))
        ));
    }

    #[test]
    fn threshold_examples() {
        let th = |m1, mt, t| boundary_threshold(&OneTInstance::new(m1, mt, t, 1.0).unwrap());
        assert!((th(1.0, 4.0, 2.0) - 2.0).abs() < 1e-15);
        assert!((th(2.0, 32.0, 2.0) - 8.0).abs() < 1e-14);
        assert!((th(1.0, 1.0 + 1e-9, 2.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn threshold_tie_uses_boundary() {
        let r = solve_1t(&OneTInstance::new(1.0, 4.0, 2.0, 2.0).unwrap(), 1e-12).unwrap();
        assert_eq!(r.branch, OneTBranch::Boundary);
        assert!((r.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scaling_identity() {
        let c = 3.0;
        for t in [1.5, 2.0, 3.0] {
            let big = solve_1t(
                &OneTInstance::new(50.0, c * 50f64.powf(t), t, 100.0).unwrap(),
                1e-13,
            )
            .unwrap();
            let unit = solve_1t(&OneTInstance::new(1.0, c, t, 2.0).unwrap(), 1e-13).unwrap();
            assert!(
                (big.value - 50.0 * unit.value).abs() <= 1e-9 * big.value,
                "t = {t}"
            );
        }
    }

    #[test]
    fn infeasible_moments() {
        for mt in [1.0, 0.5] {
            assert!(matches!(
                OneTInstance::new(1.0, mt, 2.0, 1.0),
                Err(GmpError::Infeasible(_))
            ));
        }
        assert!(matches!(
            OneTInstance::new(1.0, 2.0, 1.0, 1.0),
            Err(GmpError::Domain(_))
        ));
    }

    #[test]
    fn value_curve_examples() {
        let v = value_curve_1t(1.0, 4.0, 2.0, &[1.0, 2.0], 1e-12).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0].1 - 0.75).abs() < 1e-15 && (v[1].1 - 0.5).abs() < 1e-15);
        assert!(value_curve_1t(1.0, 4.0, 2.0, &[], 1e-12)
            .unwrap()
            .is_empty());
    }
}
