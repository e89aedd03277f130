//! Generalized moment problems over distributions on `[0, ∞)`.
//!
//! A problem is described by an objective function `g`, moment functions
//! `h_0 ≡ 1, h_1, …, h_n` and moment values `m_0 = 1, m_1, …, m_n`. A candidate
//! optimum is a finite [`DiscreteDistribution`] paired with a [`DualCertificate`]
//! `z`, which induces
//!
//! ```text
//! H(x; z) = Σ z_i h_i(x) − g(x)
//! ```
//!
//! [`verify_optimality`] checks the four blocks of the primal-dual optimality
//! condition: primal feasibility of the moments, complementary slackness
//! (`H = 0` on the support), the tangent condition (`H' = 0` at differentiable
//! interior support points) and dual feasibility (`H` of one sign on the domain).
//! Dual feasibility is sampled on a truncated grid since the domain is unbounded.

use serde::{Deserialize, Serialize};

use crate::error::{GmpError, Result};

/// Support points closer than this to a kink are treated as sitting on it.
pub const KINK_TOL: f64 = 1e-12;

/// Tolerance on `Σ p = 1` for a [`DiscreteDistribution`].
pub const MASS_TOL: f64 = 1e-12;

/// A moment (or objective) function on `[0, ∞)` with a known derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentFunction {
    /// `0`
    Zero,
    /// `1`, the mass constraint.
    One,
    /// `x^p` for `p ≥ 1`.
    Power(f64),
    /// `e^{r x}`.
    Exp(f64),
    /// `(x − k)_+`
    Hinge(f64),
    /// `(x − k)_+^2`
    HingeSquared(f64),
}

impl MomentFunction {
    /// Short human-readable name.
    pub fn id(&self) -> String {
        match *self {
            MomentFunction::Zero => "0".into(),
            MomentFunction::One => "1".into(),
            MomentFunction::Power(1.0) => "x".into(),
            MomentFunction::Power(p) => format!("x^{p}"),
            MomentFunction::Exp(1.0) => "exp(x)".into(),
            MomentFunction::Exp(r) => format!("exp({r}x)"),
            MomentFunction::Hinge(k) => format!("(x-{k})+"),
            MomentFunction::HingeSquared(k) => format!("(x-{k})+^2"),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MomentFunction::Zero => 0.0,
            MomentFunction::One => 1.0,
            MomentFunction::Power(p) => power(x, p),
            MomentFunction::Exp(r) => (r * x).exp(),
            MomentFunction::Hinge(k) => (x - k).max(0.0),
            MomentFunction::HingeSquared(k) => {
                let d = (x - k).max(0.0);
                d * d
            }
        }
    }

    /// Derivative at `x`, or `None` at a declared non-differentiable point.
    pub fn deriv(&self, x: f64) -> Option<f64> {
        if self.is_kink(x) {
            return None;
        }
        Some(match *self {
            MomentFunction::Zero | MomentFunction::One => 0.0,
            MomentFunction::Power(1.0) => 1.0,
            MomentFunction::Power(2.0) => 2.0 * x,
            MomentFunction::Power(p) => p * power(x, p - 1.0),
            MomentFunction::Exp(r) => r * (r * x).exp(),
            MomentFunction::Hinge(k) => {
                if x > k {
                    1.0
                } else {
                    0.0
                }
            }
            MomentFunction::HingeSquared(k) => 2.0 * (x - k).max(0.0),
        })
    }

    /// Points where the derivative is undefined, ascending.
    pub fn nondiff_points(&self) -> Vec<f64> {
        match *self {
            MomentFunction::Hinge(k) => vec![k],
            _ => Vec::new(),
        }
    }

    fn is_kink(&self, x: f64) -> bool {
        self.nondiff_points()
            .iter()
            .any(|&k| (x - k).abs() <= KINK_TOL)
    }
}

fn power(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if x == 0.0 {
        0.0
    } else {
        x.powf(p)
    }
}

/// One support point of a discrete distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// Finite distribution on `[0, ∞)` with strictly increasing support and
/// strictly positive probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<Atom>,
}

impl DiscreteDistribution {
    /// Builds a distribution from `(x, p)` pairs in any order.
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<Atom> = points.into_iter().map(|(x, p)| Atom { x, p }).collect();
        if atoms.is_empty() {
            return Err(GmpError::Domain(
                "distribution has no support points".into(),
            ));
        }
        for a in &atoms {
            if !a.x.is_finite() || !a.p.is_finite() {
                return Err(GmpError::NonFinite(format!("atom ({}, {})", a.x, a.p)));
            }
            if a.x < 0.0 {
                return Err(GmpError::Domain(format!(
                    "support point {} is negative",
                    a.x
                )));
            }
            if a.p <= 0.0 {
                return Err(GmpError::Domain(format!(
                    "probability {} at x = {} is not positive",
                    a.p, a.x
                )));
            }
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        if atoms.windows(2).any(|w| w[0].x == w[1].x) {
            return Err(GmpError::Domain("support points are not distinct".into()));
        }
        let mass: f64 = atoms.iter().map(|a| a.p).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(GmpError::Domain(format!(
                "probabilities sum to {mass}, not 1"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.x)
    }

    pub fn max_support(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.x)
    }

    /// `E[f(X)]`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| f(a.x) * a.p).sum()
    }
}

/// Dual vector `z` aligned with the moment functions `h_0 … h_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub z: Vec<f64>,
}

impl DualCertificate {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
            return Err(GmpError::NonFinite(format!("dual coefficient {bad}")));
        }
        Ok(Self { z })
    }

    /// Adds `noise` to every coefficient. Used to build negative controls.
    pub fn perturbed(&self, noise: f64) -> Self {
        Self {
            z: self.z.iter().map(|v| v + noise).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    /// Sign that makes a dual-feasible `H` nonnegative.
    pub fn dual_sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }
}

/// `max/min E[g(X)] + offset` subject to `E[h_i(X)] = m_i`.
///
/// `offset` carries constant objective terms (such as `−M_+²` in the upper
/// partial moment variance problem) so primal and dual objectives stay comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmpInstance {
    pub g: MomentFunction,
    pub hs: Vec<MomentFunction>,
    pub ms: Vec<f64>,
    pub sense: Sense,
    /// Upper end of the truncated domain used for numerical scans.
    pub support_hi: f64,
    pub offset: f64,
}

impl GmpInstance {
    pub fn new(
        g: MomentFunction,
        hs: Vec<MomentFunction>,
        ms: Vec<f64>,
        sense: Sense,
        support_hi: f64,
    ) -> Result<Self> {
        if hs.len() != ms.len() {
            return Err(GmpError::Dimension {
                expected: hs.len(),
                got: ms.len(),
            });
        }
        if ms.first() != Some(&1.0) || hs.first() != Some(&MomentFunction::One) {
            return Err(GmpError::Domain(
                "the first moment row must be the mass constraint E[1] = 1".into(),
            ));
        }
        if !(support_hi > 0.0 && support_hi.is_finite()) {
            return Err(GmpError::Domain(format!("support_hi = {support_hi}")));
        }
        Ok(Self {
            g,
            hs,
            ms,
            sense,
            support_hi,
            offset: 0.0,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// All kinks of `g` and the `h_i`, ascending and deduplicated.
    pub fn nondiff_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = std::iter::once(&self.g)
            .chain(self.hs.iter())
            .flat_map(|f| f.nondiff_points())
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn moment_scale(&self) -> f64 {
        self.ms.iter().fold(1.0_f64, |acc, m| acc.max(m.abs()))
    }
}

/// Residual tolerances used by [`verify_optimality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Relative to `max(1, |m|∞)`.
    pub primal: f64,
    pub slack: f64,
    pub tangent: f64,
    /// Allowed negative excursion of the sign-adjusted `H` on the scan grid.
    pub dual: f64,
    /// Relative to `max(1, |value|)`.
    pub gap: f64,
    /// Number of uniform scan points on `[0, support_hi]`.
    pub grid_points: usize,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            primal: 1e-9,
            slack: 1e-8,
            tangent: 1e-6,
            dual: 1e-7,
            gap: 1e-8,
            grid_points: 10_000,
        }
    }
}

/// Outcome of [`verify_optimality`]. Residuals are absolute; `pass` applies
/// the scaling described on [`ToleranceSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub primal_residual: f64,
    pub slack_residual: f64,
    pub tangent_residual: f64,
    /// Minimum of `σ·H(x; z)` over the scan grid, `σ = +1` for max problems
    /// and `−1` for min problems.
    pub dual_min_on_grid: f64,
    pub duality_gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub pass: bool,
}

fn check_dims(inst: &GmpInstance, cert: &DualCertificate) -> Result<()> {
    if cert.z.len() != inst.hs.len() {
        return Err(GmpError::Dimension {
            expected: inst.hs.len(),
            got: cert.z.len(),
        });
    }
    Ok(())
}

fn check_domain(inst: &GmpInstance, x: f64) -> Result<()> {
    if !(0.0..=inst.support_hi).contains(&x) {
        return Err(GmpError::Domain(format!(
            "x = {x} lies outside [0, {}]",
            inst.support_hi
        )));
    }
    Ok(())
}

fn h_unchecked(cert: &DualCertificate, inst: &GmpInstance, x: f64) -> f64 {
    let lin: f64 = cert
        .z
        .iter()
        .zip(&inst.hs)
        .map(|(z, h)| if *z == 0.0 { 0.0 } else { z * h.eval(x) })
        .sum();
    lin - inst.g.eval(x)
}

fn h_deriv_unchecked(cert: &DualCertificate, inst: &GmpInstance, x: f64) -> Option<f64> {
    let mut acc = -inst.g.deriv(x)?;
    for (z, h) in cert.z.iter().zip(&inst.hs) {
        let d = h.deriv(x)?;
        if *z != 0.0 {
            acc += z * d;
        }
    }
    Some(acc)
}

/// `H(x; z) = Σ z_i h_i(x) − g(x)`.
pub fn h_function(cert: &DualCertificate, inst: &GmpInstance, x: f64) -> Result<f64> {
    check_dims(inst, cert)?;
    check_domain(inst, x)?;
    Ok(h_unchecked(cert, inst, x))
}

/// `H'(x; z)`; fails with [`GmpError::NonDifferentiable`] at a kink of `g` or any `h_i`.
pub fn h_derivative(cert: &DualCertificate, inst: &GmpInstance, x: f64) -> Result<f64> {
    check_dims(inst, cert)?;
    check_domain(inst, x)?;
    h_deriv_unchecked(cert, inst, x).ok_or(GmpError::NonDifferentiable(x))
}

/// `(E[h_0(X)], …, E[h_n(X)])`.
pub fn moments_of(dist: &DiscreteDistribution, hs: &[MomentFunction]) -> Vec<f64> {
    hs.iter().map(|h| dist.expect(|x| h.eval(x))).collect()
}

/// Checks the primal-dual optimality condition for `(dist, cert)` on `inst`.
pub fn verify_optimality(
    inst: &GmpInstance,
    dist: &DiscreteDistribution,
    cert: &DualCertificate,
    tol: &ToleranceSet,
) -> Result<VerificationReport> {
    check_dims(inst, cert)?;
    for x in dist.support() {
        check_domain(inst, x)?;
    }

    let moments = moments_of(dist, &inst.hs);
    let primal_residual = moments
        .iter()
        .zip(&inst.ms)
        .map(|(a, m)| (a - m).abs())
        .fold(0.0, f64::max);

    let slack_residual = dist
        .support()
        .map(|x| h_unchecked(cert, inst, x).abs())
        .fold(0.0, f64::max);

    let kinks = inst.nondiff_points();
    let tangent_residual = dist
        .support()
        .filter(|&x| x > 0.0 && x < inst.support_hi)
        .filter(|&x| kinks.iter().all(|k| (x - k).abs() > KINK_TOL))
        .filter_map(|x| h_deriv_unchecked(cert, inst, x))
        .map(f64::abs)
        .fold(0.0, f64::max);

    let sign = inst.sense.dual_sign();
    let n = tol.grid_points.max(2);
    let step = inst.support_hi / (n - 1) as f64;
    let extra = dist.support().chain(
        kinks
            .iter()
            .copied()
            .filter(|&k| (0.0..=inst.support_hi).contains(&k)),
    );
    let dual_min_on_grid = (0..n)
        .map(|i| i as f64 * step)
        .chain(extra)
        .map(|x| sign * h_unchecked(cert, inst, x))
        .fold(f64::INFINITY, f64::min);

    let primal_objective = dist.expect(|x| inst.g.eval(x)) + inst.offset;
    let dual_objective: f64 =
        cert.z.iter().zip(&inst.ms).map(|(z, m)| z * m).sum::<f64>() + inst.offset;
    let duality_gap = (primal_objective - dual_objective).abs();

    let pass = primal_residual <= tol.primal * inst.moment_scale()
        && slack_residual <= tol.slack
        && tangent_residual <= tol.tangent
        && dual_min_on_grid >= -tol.dual
        && duality_gap <= tol.gap * primal_objective.abs().max(1.0);

    Ok(VerificationReport {
        primal_residual,
        slack_residual,
        tangent_residual,
        dual_min_on_grid,
        duality_gap,
        primal_objective,
        dual_objective,
        pass,
    })
}
