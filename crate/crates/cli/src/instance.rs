//! Instance files: one JSON document with `problem`, `params`, an optional
//! `tolerance` and optional `oracle` grid overrides.

use std::path::Path;

use gmp_core::newsvendor::{Ambiguity, DemandFamily, NewsvendorInstance};
use gmp_core::one_exp::OneExpInstance;
use gmp_core::one_t::OneTInstance;
use gmp_core::upm::UpmInstance;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Mp1t,
    Upm,
    Mp1e,
    Newsvendor,
    Oracle,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Mp1t => "mp1t",
            ProblemKind::Upm => "upm",
            ProblemKind::Mp1e => "mp1e",
            ProblemKind::Newsvendor => "newsvendor",
            ProblemKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleOverrides {
    pub n_points: Option<usize>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub max_rounds: Option<usize>,
    pub seed_support: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    problem: ProblemKind,
    params: Map<String, Value>,
    tolerance: Option<f64>,
    #[serde(default)]
    oracle: OracleOverrides,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OneTParams {
    m1: f64,
    mt: f64,
    t: f64,
    q: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OneExpParams {
    m1: f64,
    me: f64,
    t: f64,
    q: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpmParams {
    m1: f64,
    gamma: f64,
    mplus: f64,
    v1: Option<f64>,
}

/// Either explicit moments or a demand law plus the exponential rate `t`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewsvendorParams {
    ambiguity: Option<Ambiguity>,
    demand: Option<DemandFamily>,
    t: Option<f64>,
    eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFamily {
    Mp1t,
    Mp1e,
    Upm,
}

/// A problem the closed-form solvers handle directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    OneT(OneTInstance),
    OneExp(OneExpInstance),
    Upm { inst: UpmInstance, v1: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Solver(Target),
    Newsvendor(NewsvendorInstance),
    /// Grid LP for one of the solver problems.
    Oracle(Target),
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: ProblemKind,
    pub problem: Problem,
    pub tolerance: f64,
    pub oracle: OracleOverrides,
    params: Map<String, Value>,
}

fn typed<T: DeserializeOwned>(params: &Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(params.clone()))
        .map_err(|e| CliError::Schema(format!("params: {e}")))
}

fn target(kind: OracleFamily, params: &Map<String, Value>) -> Result<Target, CliError> {
    let v = CliError::from_validation;
    Ok(match kind {
        OracleFamily::Mp1t => {
            let p: OneTParams = typed(params)?;
            Target::OneT(OneTInstance::new(p.m1, p.mt, p.t, p.q).map_err(v)?)
        }
        OracleFamily::Mp1e => {
            let p: OneExpParams = typed(params)?;
            Target::OneExp(OneExpInstance::new(p.m1, p.me, p.t, p.q).map_err(v)?)
        }
        OracleFamily::Upm => {
            let p: UpmParams = typed(params)?;
            Target::Upm {
                inst: UpmInstance::new(p.m1, p.gamma, p.mplus).map_err(v)?,
                v1: p.v1,
            }
        }
    })
}

fn newsvendor(params: &Map<String, Value>, eps: f64) -> Result<NewsvendorInstance, CliError> {
    let p: NewsvendorParams = typed(params)?;
    let ambiguity = match (p.ambiguity, p.demand, p.t) {
        (Some(a), None, None) => a,
        (None, Some(d), Some(t)) => {
            let (m1, me) = d
                .exponential_moments(t)
                .map_err(CliError::from_validation)?;
            Ambiguity::Exponential { m1, me, t }
        }
        _ => {
            return Err(CliError::Schema(
                "newsvendor params need either `ambiguity`, or `demand` together with `t`".into(),
            ))
        }
    };
    NewsvendorInstance::new(ambiguity, p.eta, eps).map_err(CliError::from_validation)
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawInstance =
            serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(CliError::Schema(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        Self::build(raw.problem, raw.params, tolerance, raw.oracle)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn build(
        kind: ProblemKind,
        params: Map<String, Value>,
        tolerance: f64,
        oracle: OracleOverrides,
    ) -> Result<Self, CliError> {
        let problem = match kind {
            ProblemKind::Mp1t => Problem::Solver(target(OracleFamily::Mp1t, &params)?),
            ProblemKind::Mp1e => Problem::Solver(target(OracleFamily::Mp1e, &params)?),
            ProblemKind::Upm => Problem::Solver(target(OracleFamily::Upm, &params)?),
            ProblemKind::Newsvendor => Problem::Newsvendor(newsvendor(&params, tolerance)?),
            ProblemKind::Oracle => {
                let mut rest = params.clone();
                let family = rest
                    .remove("family")
                    .ok_or_else(|| CliError::Schema("oracle params need a `family`".into()))?;
                let family: OracleFamily = serde_json::from_value(family)
                    .map_err(|e| CliError::Schema(format!("family: {e}")))?;
                Problem::Oracle(target(family, &rest)?)
            }
        };
        Ok(Self {
            kind,
            problem,
            tolerance,
            oracle,
            params,
        })
    }

    /// Same instance with the numeric top-level parameter `name` set to `value`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, CliError> {
        match self.params.get(name) {
            Some(Value::Number(_)) => {}
            _ => {
                return Err(CliError::Schema(format!(
                    "`{name}` is not a numeric parameter of this {} instance",
                    self.kind.name()
                )))
            }
        }
        let number = serde_json::Number::from_f64(value)
            .ok_or_else(|| CliError::Schema(format!("{name} = {value} is not finite")))?;
        let mut params = self.params.clone();
        params.insert(name.to_string(), Value::Number(number));
        Self::build(self.kind, params, self.tolerance, self.oracle.clone())
    }

    /// Fails with a schema error unless `name` can be swept.
    pub fn check_param(&self, name: &str) -> Result<(), CliError> {
        match self.params.get(name) {
            Some(Value::Number(n)) => self
                .with_param(name, n.as_f64().unwrap_or(f64::NAN))
                .map(|_| ()),
            _ => Err(CliError::Schema(format!(
                "`{name}` is not a numeric parameter of this {} instance",
                self.kind.name()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_problem() {
        let i = Instance::from_json(
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2, "q": 1}}"#,
        )
        .unwrap();
        assert_eq!(i.tolerance, DEFAULT_TOLERANCE);
        assert!(matches!(i.problem, Problem::Solver(Target::OneT(_))));

        let i = Instance::from_json(
            r#"{"problem": "newsvendor", "tolerance": 1e-6,
                "params": {"demand": {"family": "exponential", "lambda": 0.02}, "t": 0.01, "eta": 0.99}}"#,
        )
        .unwrap();
        match i.problem {
            Problem::Newsvendor(n) => assert_eq!(n.ambiguity.mean(), 50.0),
            _ => panic!(),
        }

        let i = Instance::from_json(
            r#"{"problem": "oracle", "oracle": {"n_points": 51},
                "params": {"family": "upm", "m1": 0.5, "gamma": 4, "mplus": 0.2}}"#,
        )
        .unwrap();
        assert!(matches!(i.problem, Problem::Oracle(Target::Upm { .. })));
        assert_eq!(i.oracle.n_points, Some(51));
    }

    #[test]
    fn schema_violations() {
        for bad in [
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2, "q": 1, "extra": 0}}"#,
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2}}"#,
            r#"{"problem": "mp2", "params": {}}"#,
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2, "q": 1}, "colour": 1}"#,
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2, "q": -1}}"#,
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2, "q": 1}, "tolerance": 0}"#,
            r#"{"problem": "oracle", "params": {"m1": 1, "mt": 4, "t": 2, "q": 1}}"#,
            r#"{"problem": "newsvendor", "params": {"eta": 0.5}}"#,
            r#"not json"#,
        ] {
            assert!(
                matches!(Instance::from_json(bad), Err(CliError::Schema(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn infeasible_is_not_a_schema_error() {
        let e = Instance::from_json(
            r#"{"problem": "mp1t", "params": {"m1": 2, "mt": 4, "t": 2, "q": 1}}"#,
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("Mt > M1^t"));
    }

    #[test]
    fn parameter_override() {
        let i = Instance::from_json(
            r#"{"problem": "mp1t", "params": {"m1": 1, "mt": 4, "t": 2, "q": 1}}"#,
        )
        .unwrap();
        let j = i.with_param("q", 3.0).unwrap();
        match j.problem {
            Problem::Solver(Target::OneT(t)) => assert_eq!(t.q, 3.0),
            _ => panic!(),
        }
        assert!(i.with_param("eta", 0.5).is_err());
        assert!(i.check_param("q").is_ok());
    }
}
