//! Minimum variance of the upper partial moment `(X − 1)_+` over distributions
//! on `[0, ∞)` with mean `M1`, second moment `γ M1²` and `E(X − 1)_+ = M₊`.
//!
//! The objective is `E(X − 1)_+² − M₊²`. When `M1 ≤ 1/γ + M₊` the optimum is a
//! unique two-point distribution on `{u, v}` with `0 ≤ u < 1 < v`; otherwise a
//! one-parameter family of three-point distributions `{0, v₁, v₂}` is optimal.
//! General order quantities `q` reduce to `q = 1` by scaling, see
//! [`UpmInstance::from_raw`].

use serde::Serialize;

use crate::error::{GmpError, Result};
use crate::gmp::{
    verify_optimality, DiscreteDistribution, DualCertificate, GmpInstance, MomentFunction, Sense,
    ToleranceSet, VerificationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpmInstance {
    pub m1: f64,
    pub gamma: f64,
    pub mplus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpmBranch {
    TwoPoint,
    DegenerateFamily,
}

#[derive(Debug, Clone, Serialize)]
pub struct UpmReport {
    pub value: f64,
    pub dist: DiscreteDistribution,
    pub cert: DualCertificate,
    pub branch: UpmBranch,
    pub kappa: Option<f64>,
    pub family_v1: Option<f64>,
    pub verification: VerificationReport,
}

impl UpmInstance {
    pub fn new(m1: f64, gamma: f64, mplus: f64) -> Result<Self> {
        for (name, v) in [("M1", m1), ("gamma", gamma), ("Mplus", mplus)] {
            if !v.is_finite() {
                return Err(GmpError::NonFinite(format!("{name} = {v}")));
            }
        }
        if m1 <= 0.0 {
            return Err(GmpError::Infeasible(format!(
                "M1 must be positive, got {m1}"
            )));
        }
        if gamma <= 1.0 {
            return Err(GmpError::Infeasible(format!(
                "gamma = M2/M1^2 must exceed 1, got {gamma}"
            )));
        }
        if mplus <= 0.0 {
            return Err(GmpError::Infeasible(format!(
                "Mplus must be positive, got {mplus}"
            )));
        }
        if mplus <= m1 - 1.0 {
            return Err(GmpError::Infeasible(format!(
                "need Mplus > M1 - 1, got Mplus = {mplus} and M1 = {m1}"
            )));
        }
        Ok(Self { m1, gamma, mplus })
    }

    /// Normalizes raw moments `E X = m1`, `E X² = m2`, `E(X − q)_+ = mplus` to
    /// `q = 1` by scaling `X` by `1/q`. Values of the normalized problem scale
    /// back by `q²`, support points by `q`.
    pub fn from_raw(m1: f64, m2: f64, mplus: f64, q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(GmpError::Domain(format!("q must be positive, got {q}")));
        }
        if !(m1 > 0.0) {
            return Err(GmpError::Infeasible(format!(
                "M1 must be positive, got {m1}"
            )));
        }
        Self::new(m1 / q, m2 / (m1 * m1), mplus / q)
    }

    pub fn m2(&self) -> f64 {
        self.gamma * self.m1 * self.m1
    }

    pub fn branch(&self) -> UpmBranch {
        if self.m1 <= 1.0 / self.gamma + self.mplus {
            UpmBranch::TwoPoint
        } else {
            UpmBranch::DegenerateFamily
        }
    }

    /// Smallest admissible `v₁` for the three-point family.
    pub fn family_lower_bound(&self) -> f64 {
        ((self.gamma * self.m1 * self.m1 - self.m1) / self.mplus).max(1.0)
    }

    pub fn gmp(&self, support_max: f64) -> GmpInstance {
        let hi = (10.0 * support_max).max(10.0).max(10.0 * self.m1);
        GmpInstance {
            g: MomentFunction::HingeSquared(1.0),
            hs: vec![
                MomentFunction::One,
                MomentFunction::Power(1.0),
                MomentFunction::Power(2.0),
                MomentFunction::Hinge(1.0),
            ],
            ms: vec![1.0, self.m1, self.m2(), self.mplus],
            sense: Sense::Min,
            support_hi: hi,
            offset: -self.mplus * self.mplus,
        }
    }
}

/// `√((γ−1)[(γ−1)M1² + 4M₊(M1−1) − 4M₊²])`
pub fn kappa(inst: &UpmInstance) -> Result<f64> {
    let UpmInstance { m1, gamma, mplus } = *inst;
    let g1 = gamma - 1.0;
    let rad = g1 * (g1 * m1 * m1 + 4.0 * mplus * (m1 - 1.0) - 4.0 * mplus * mplus);
    if rad < 0.0 {
        return Err(GmpError::Infeasible(format!(
            "no two-point distribution matches these moments (kappa radicand {rad:e})"
        )));
    }
    Ok(rad.sqrt())
}

pub fn solve_upm(inst: &UpmInstance, v1_choice: Option<f64>) -> Result<UpmReport> {
    solve_upm_with(inst, v1_choice, &ToleranceSet::default())
}

pub fn solve_upm_with(
    inst: &UpmInstance,
    v1_choice: Option<f64>,
    tol: &ToleranceSet,
) -> Result<UpmReport> {
    let inst = UpmInstance::new(inst.m1, inst.gamma, inst.mplus)?;
    match inst.branch() {
        UpmBranch::TwoPoint => two_point(&inst, tol),
        UpmBranch::DegenerateFamily => {
            let v1 = v1_choice.unwrap_or_else(|| inst.family_lower_bound() + 1.0);
            family_member(&inst, v1, tol)
        }
    }
}

fn two_point(inst: &UpmInstance, tol: &ToleranceSet) -> Result<UpmReport> {
    let UpmInstance { m1, gamma, mplus } = *inst;
    if m1 > 2.0 / gamma {
        return Err(GmpError::Infeasible(format!(
            "need M1 <= 2/gamma, got M1 = {m1} and 2/gamma = {}",
            2.0 / gamma
        )));
    }
    let k = kappa(inst)?;
    let g1 = gamma - 1.0;
    let mut u = m1 * (1.0 - (g1 * m1 + k) / (2.0 * (1.0 - m1 + mplus)));
    let v = m1 * (1.0 + (g1 * m1 - k) / (2.0 * mplus));
    // a support point at the origin comes back as a rounding-level negative
    if u < 0.0 && u > -1e-12 * m1 {
        u = 0.0;
    }
    if !((0.0..1.0).contains(&u) && v > 1.0) {
        return Err(GmpError::Infeasible(format!(
            "two-point support ({u}, {v}) violates 0 <= u < 1 < v"
        )));
    }
    let pv = (m1 - u) / (v - u);
    let dist = DiscreteDistribution::new([(u, 1.0 - pv), (v, pv)])?;

    let z0 = -0.5
        * ((2.0 * mplus - m1) * m1
            + m1 * (2.0 * (gamma - 2.0) * mplus * mplus + g1 * m1 * m1
                - 2.0 * mplus * (1.0 + (gamma - 2.0) * m1))
                / k);
    let z1 =
        mplus - m1 - (2.0 * mplus * mplus - g1 * m1 * m1 + mplus * (2.0 + (gamma - 3.0) * m1)) / k;
    let z2 =
        -0.5 * ((g1 * m1 * m1 + 2.0 * mplus * (m1 - 1.0) - 2.0 * mplus * mplus) / (m1 * k) - 1.0);
    let z3 = (m1 - 1.0) - g1 * m1 * (m1 - 1.0 - 2.0 * mplus) / k;
    let cert = DualCertificate::new(vec![z0, z1, z2, z3])?;

    let value = 0.5 * (2.0 * mplus * (m1 - 1.0) + m1 * (g1 * m1 - k)) - mplus * mplus;
    let verification = verify_optimality(&inst.gmp(v), &dist, &cert, tol)?;
    Ok(UpmReport {
        value,
        dist,
        cert,
        branch: UpmBranch::TwoPoint,
        kappa: Some(k),
        family_v1: None,
        verification,
    })
}

fn family_member(inst: &UpmInstance, v1: f64, tol: &ToleranceSet) -> Result<UpmReport> {
    let UpmInstance { m1, gamma, mplus } = *inst;
    let bound = inst.family_lower_bound();
    if !(v1 >= bound) || !v1.is_finite() {
        return Err(GmpError::FamilyParam { v1, bound });
    }
    let den = gamma * m1 * m1 - 2.0 * m1 * v1 + m1 * v1 * v1 - mplus * v1 * v1;
    let v2 = (m1 * v1 - gamma * m1 * m1) / ((m1 - mplus) * v1 - m1);
    let p0 = 1.0 - m1 + mplus;
    let p1 = m1 * m1 * (gamma * m1 - gamma * mplus - 1.0) / den;
    let p2 = (m1 * v1 - mplus * v1 - m1).powi(2) / den;
    let atoms: Vec<(f64, f64)> = if v1 == v2 {
        vec![(0.0, p0), (v1, p1 + p2)]
    } else {
        vec![(0.0, p0), (v1, p1), (v2, p2)]
    };
    let dist = DiscreteDistribution::new(atoms).map_err(|e| {
        GmpError::Infeasible(format!("three-point family member at v1 = {v1}: {e}"))
    })?;
    let cert = DualCertificate::new(vec![0.0, -1.0, 1.0, -1.0])?;
    let value = m1 * (gamma * m1 - 1.0) - mplus - mplus * mplus;
    let verification = verify_optimality(&inst.gmp(dist.max_support()), &dist, &cert, tol)?;
    Ok(UpmReport {
        value,
        dist,
        cert,
        branch: UpmBranch::DegenerateFamily,
        kappa: None,
        family_v1: Some(v1),
        verification,
    })
}

/// One optimal three-point distribution per admissible `v₁`.
pub fn enumerate_family(inst: &UpmInstance, v1_list: &[f64]) -> Result<Vec<UpmReport>> {
    let inst = UpmInstance::new(inst.m1, inst.gamma, inst.mplus)?;
    if inst.branch() != UpmBranch::DegenerateFamily {
        return Err(GmpError::Branch(
            "the three-point family requires M1 > 1/gamma + Mplus".into(),
        ));
    }
    let tol = ToleranceSet::default();
    v1_list
        .iter()
        .map(|&v1| family_member(&inst, v1, &tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmp::moments_of;

    #[test]
    fn kappa_examples() {
        let k = kappa(&UpmInstance::new(0.5, 2.0, 0.1).unwrap()).unwrap();
        assert!((k - 0.1).abs() < 1e-15);
        let k = kappa(&UpmInstance::new(0.5, 4.0, 0.2).unwrap()).unwrap();
        assert!((k - 0.57f64.sqrt()).abs() < 1e-15);
        let k = kappa(&UpmInstance::new(0.5, 3.0, 1e-12).unwrap()).unwrap();
        assert!((k - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_point_example() {
        let r = solve_upm(&UpmInstance::new(0.5, 2.0, 0.1).unwrap(), None).unwrap();
        assert_eq!(r.branch, UpmBranch::TwoPoint);
        let a = r.dist.atoms();
        assert!((a[0].x - 0.25).abs() < 1e-15 && (a[1].x - 1.5).abs() < 1e-15);
        assert!((a[0].p - 0.8).abs() < 1e-15 && (a[1].p - 0.2).abs() < 1e-15);
        assert!((r.value - 0.04).abs() < 1e-15);
        let m = moments_of(&r.dist, &[MomentFunction::HingeSquared(1.0)]);
        assert!((m[0] - 0.05).abs() < 1e-15);
        let expected = [-0.05, 0.4, -0.8, 3.0];
        for (z, e) in r.cert.z.iter().zip(expected) {
            assert!((z - e).abs() < 1e-13, "{:?}", r.cert.z);
        }
        assert!(r.verification.pass, "{:?}", r.verification);
    }

    #[test]
    fn degenerate_examples() {
        let inst = UpmInstance::new(0.5, 4.0, 0.2).unwrap();
        let r = solve_upm(&inst, None).unwrap();
        assert_eq!(r.branch, UpmBranch::DegenerateFamily);
        assert!((r.value - 0.26).abs() < 1e-15);
        assert_eq!(r.family_v1, Some(3.5));
        assert!(r.verification.pass, "{:?}", r.verification);

        let r = solve_upm(&inst, Some(2.5)).unwrap();
        let a = r.dist.atoms();
        assert_eq!(a.len(), 3);
        assert!((a[1].x - 1.0).abs() < 1e-15 && (a[2].x - 2.5).abs() < 1e-15);
        assert!((a[0].p - 0.7).abs() < 1e-15);
        assert!((a[1].p - 1.0 / 6.0).abs() < 1e-15);
        assert!((a[2].p - 2.0 / 15.0).abs() < 1e-15);
        assert!(r.verification.pass, "{:?}", r.verification);
    }

    #[test]
    fn family_bound_enforced() {
        let inst = UpmInstance::new(0.5, 4.0, 0.2).unwrap();
        assert_eq!(
            solve_upm(&inst, Some(2.0)).unwrap_err(),
            GmpError::FamilyParam {
                v1: 2.0,
                bound: 2.5
            }
        );
    }

    #[test]
    fn enumerate_examples() {
        let inst = UpmInstance::new(0.5, 4.0, 0.2).unwrap();
        let reps = enumerate_family(&inst, &[2.5, 3.0, 5.0]).unwrap();
        assert_eq!(reps.len(), 3);
        for r in &reps {
            assert!((r.value - 0.26).abs() < 1e-15);
            assert!(r.verification.pass);
        }
        assert!(enumerate_family(&inst, &[]).unwrap().is_empty());
        let two = UpmInstance::new(0.5, 2.0, 0.1).unwrap();
        assert!(matches!(
            enumerate_family(&two, &[2.0]),
            Err(GmpError::Branch(_))
        ));
    }

    #[test]
    fn raw_normalization() {
        // {0.5, 3} scaled by q = 2
        let inst =
            UpmInstance::from_raw(0.5 * (1.0 + 6.0), 0.5 * (1.0 + 36.0), 0.5 * 4.0, 2.0).unwrap();
        assert!((inst.m1 - 1.75).abs() < 1e-15);
        assert!((inst.mplus - 1.0).abs() < 1e-15);
        assert!((inst.m2() - 0.5 * (0.25 + 9.0)).abs() < 1e-14);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            UpmInstance::new(0.5, 1.0, 0.1),
            Err(GmpError::Infeasible(_))
        ));
        assert!(matches!(
            UpmInstance::new(2.0, 1.5, 0.5),
            Err(GmpError::Infeasible(_))
        ));
        // two-point region but M1 > 2/gamma
        let inst = UpmInstance::new(0.9, 3.0, 0.9).unwrap();
        assert!(matches!(
            solve_upm(&inst, None),
            Err(GmpError::Infeasible(_))
        ));
    }
}
