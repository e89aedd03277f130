//! Distributionally robust newsvendor: choose the order quantity `q` minimizing
//!
//! ```text
//! f(q) = max_F E_F (X − q)_+ + (1 − η) q
//! ```
//!
//! over an ambiguity set fixed by the mean and either a `t`-th or an
//! exponential moment. `f` is convex, so the minimizer is bracketed by
//! doubling and then located by golden-section search.

use std::cell::{Cell, RefCell};

use serde::{Deserialize, Serialize};

use crate::error::{GmpError, Result};
use crate::one_exp::{solve_1e, OneExpInstance};
use crate::one_t::{solve_1t, OneTInstance};
use crate::rootfind::{expand_bracket, golden_section};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Ambiguity {
    /// Mean `m1` and `E X^t = mt`.
    Power { m1: f64, mt: f64, t: f64 },
    /// Mean `m1` and `E e^{tX} = me`.
    Exponential { m1: f64, me: f64, t: f64 },
}

impl Ambiguity {
    pub fn mean(&self) -> f64 {
        match *self {
            Ambiguity::Power { m1, .. } | Ambiguity::Exponential { m1, .. } => m1,
        }
    }

    /// `max_F E_F (X − q)_+` for `q > 0`.
    pub fn worst_case(&self, q: f64, eps: f64) -> Result<f64> {
        match *self {
            Ambiguity::Power { m1, mt, t } => {
                Ok(solve_1t(&OneTInstance::new(m1, mt, t, q)?, eps)?.value)
            }
            Ambiguity::Exponential { m1, me, t } => match OneExpInstance::new(m1, me, t, q) {
                Ok(inst) => Ok(solve_1e(&inst, eps)?.value),
                // Markov on e^{tX} bounds the tail term by Me e^{−tq}/(e t), far
                // below double resolution once tq exceeds the supported range
                Err(GmpError::Range(_)) => Ok(0.0),
                Err(e) => Err(e),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewsvendorInstance {
    pub ambiguity: Ambiguity,
    /// Critical ratio `1 − c/p`.
    pub eta: f64,
    /// Tolerance of the outer search; inner solves use `eps/100`.
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderDecision {
    pub q_star: f64,
    pub objective: f64,
    pub golden_iters: usize,
    pub inner_solves: usize,
}

impl NewsvendorInstance {
    pub fn new(ambiguity: Ambiguity, eta: f64, eps: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(GmpError::Domain(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
        if !(eps > 0.0) {
            return Err(GmpError::Domain(format!("eps must be positive, got {eps}")));
        }
        // validates the moments once, with a q that is always in range
        match ambiguity {
            Ambiguity::Power { m1, mt, t } => {
                OneTInstance::new(m1, mt, t, m1)?;
            }
            Ambiguity::Exponential { m1, me, t } => {
                OneExpInstance::new(m1, me, t, (1.0 / t).min(m1))?;
            }
        }
        Ok(Self {
            ambiguity,
            eta,
            eps,
        })
    }
}

/// `f(q) = max_F E(X − q)_+ + (1 − η) q`, with `f(0) = M1`.
pub fn worst_case_objective(inst: &NewsvendorInstance, q: f64) -> Result<f64> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(GmpError::Domain(format!(
            "order quantity must be nonnegative, got {q}"
        )));
    }
    let tail = if q == 0.0 {
        inst.ambiguity.mean()
    } else {
        inst.ambiguity.worst_case(q, inst.eps / 100.0)?
    };
    Ok(tail + (1.0 - inst.eta) * q)
}

pub fn optimize_order(inst: &NewsvendorInstance) -> Result<OrderDecision> {
    let failure = RefCell::new(None);
    let calls = Cell::new(0);
    let f = |q: f64| {
        calls.set(calls.get() + 1);
        match worst_case_objective(inst, q) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let searched = expand_bracket(f, 0.0).and_then(|(a, b)| golden_section(f, a, b, inst.eps));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let g = searched?;
    let objective = worst_case_objective(inst, g.minimizer)?;
    Ok(OrderDecision {
        q_star: g.minimizer,
        objective,
        golden_iters: g.iterations,
        inner_solves: calls.get() + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandFamily {
    Exponential { lambda: f64 },
    Unspecified,
}

impl DemandFamily {
    /// Mean and `E e^{tX}` of the demand distribution.
    pub fn exponential_moments(&self, t: f64) -> Result<(f64, f64)> {
        match *self {
            DemandFamily::Exponential { lambda } => {
                if !(lambda > 0.0) {
                    return Err(GmpError::Domain(format!(
                        "rate must be positive, got {lambda}"
                    )));
                }
                if !(t > 0.0 && t < lambda) {
                    return Err(GmpError::Domain(format!(
                        "the exponential moment needs 0 < t < lambda, got t = {t}"
                    )));
                }
                Ok((1.0 / lambda, lambda / (lambda - t)))
            }
            DemandFamily::Unspecified => Err(GmpError::UnsupportedFamily("unspecified".into())),
        }
    }
}

/// Classical newsvendor order for a known demand law: its `η`-quantile.
pub fn ground_truth_quantile(family: &DemandFamily, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(GmpError::Domain(format!(
            "eta must lie in (0, 1), got {eta}"
        )));
    }
    match *family {
        DemandFamily::Exponential { lambda } => Ok(-(-eta).ln_1p() / lambda),
        DemandFamily::Unspecified => Err(GmpError::UnsupportedFamily("unspecified".into())),
    }
}
