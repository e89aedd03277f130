use gmp_core::newsvendor::{optimize_order, Ambiguity};
use gmp_core::one_exp::{solve_1e, OneExpInstance};
use gmp_core::one_t::{solve_1t, OneTInstance};
use gmp_core::oracle::{
    default_grid_1e, default_grid_1t, default_grid_upm, refine_until, GridSpec, LpStatus,
    Refinement,
};
use gmp_core::upm::solve_upm;
use gmp_core::{
    verify_optimality, Atom, DiscreteDistribution, DualCertificate, GmpError, GmpInstance,
    ToleranceSet, VerificationReport,
};
use serde::Serialize;

use crate::error::CliError;
use crate::instance::{Instance, OracleOverrides, Problem, Target};

pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const DEFAULT_REFINE_ROUNDS: usize = 4;

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub tol: Option<f64>,
    pub grid_points: Option<usize>,
    pub seed_support: Option<bool>,
    pub dual_noise: Option<f64>,
}

impl Options {
    pub fn eps(&self, inst: &Instance) -> f64 {
        self.tol.unwrap_or(inst.tolerance)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultEnvelope {
    pub problem: String,
    pub optimal_value: f64,
    pub distribution: Vec<Atom>,
    pub dual: Vec<f64>,
    pub branch: Option<String>,
    pub root: Option<f64>,
    pub iterations: usize,
    pub verification: VerificationReport,
    pub verified: bool,
    pub timing_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_quantity: Option<f64>,
}

/// A primal-dual pair together with the moment problem it was checked against.
#[derive(Debug, Clone)]
pub struct Certified {
    pub value: f64,
    pub dist: DiscreteDistribution,
    pub cert: DualCertificate,
    pub branch: Option<String>,
    pub root: Option<f64>,
    pub iterations: usize,
    pub verification: VerificationReport,
    pub gmp: GmpInstance,
}

impl Certified {
    /// Re-verifies with every dual coefficient shifted by `noise`.
    fn with_dual_noise(mut self, noise: Option<f64>) -> Result<Self, CliError> {
        if let Some(noise) = noise {
            self.cert = self.cert.perturbed(noise);
            self.verification =
                verify_optimality(&self.gmp, &self.dist, &self.cert, &ToleranceSet::default())?;
        }
        Ok(self)
    }
}

fn label<T: Serialize>(branch: &T) -> Option<String> {
    serde_json::to_value(branch)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
}

pub fn target_gmp(target: &Target, support_max: f64) -> GmpInstance {
    match target {
        Target::OneT(i) => i.gmp(support_max),
        Target::OneExp(i) => i.gmp(support_max),
        Target::Upm { inst, .. } => inst.gmp(support_max),
    }
}

pub fn solve_target(target: &Target, eps: f64) -> Result<Certified, CliError> {
    Ok(match target {
        Target::OneT(i) => {
            let r = solve_1t(i, eps)?;
            Certified {
                gmp: i.gmp(r.dist.max_support()),
                value: r.value,
                branch: label(&r.branch),
                root: r.root,
                iterations: r.bisect_iters,
                verification: r.verification,
                dist: r.dist,
                cert: r.cert,
            }
        }
        Target::OneExp(i) => {
            let r = solve_1e(i, eps)?;
            Certified {
                gmp: i.gmp(r.dist.max_support()),
                value: r.value,
                branch: label(&r.branch),
                root: r.root,
                iterations: r.bisect_iters,
                verification: r.verification,
                dist: r.dist,
                cert: r.cert,
            }
        }
        Target::Upm { inst, v1 } => {
            let r = solve_upm(inst, *v1)?;
            Certified {
                gmp: inst.gmp(r.dist.max_support()),
                value: r.value,
                branch: label(&r.branch),
                root: r.family_v1,
                iterations: 0,
                verification: r.verification,
                dist: r.dist,
                cert: r.cert,
            }
        }
    })
}

fn base_grid(target: &Target, overrides: &OracleOverrides, opts: &Options) -> GridSpec {
    let n = opts
        .grid_points
        .or(overrides.n_points)
        .unwrap_or(DEFAULT_GRID_POINTS);
    let mut grid = match target {
        Target::OneT(i) => default_grid_1t(i, n),
        Target::OneExp(i) => default_grid_1e(i, n),
        Target::Upm { inst, .. } => default_grid_upm(inst, n),
    };
    if let Some(lo) = overrides.lo {
        grid.lo = lo;
    }
    if let Some(hi) = overrides.hi {
        grid.hi = hi;
    }
    grid
}

/// Grid LP answer, refined until successive values agree to `eps`.
pub struct OracleRun {
    pub refinement: Refinement,
    /// Change over the last refinement round.
    pub grid_bound: f64,
}

pub fn run_oracle(
    target: &Target,
    overrides: &OracleOverrides,
    opts: &Options,
    eps: f64,
) -> Result<OracleRun, CliError> {
    let mut grid = base_grid(target, overrides, opts);
    let seed = opts.seed_support.or(overrides.seed_support).unwrap_or(true);
    let support_max = if seed {
        let solved = solve_target(target, eps)?;
        grid = grid.seeded(solved.dist.support());
        solved.dist.max_support().max(grid.hi)
    } else {
        grid.hi
    };
    let rounds = overrides.max_rounds.unwrap_or(DEFAULT_REFINE_ROUNDS);
    let refinement = refine_until(&target_gmp(target, support_max), &grid, eps, rounds)?;
    match refinement.result.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(CliError::Solver(GmpError::Infeasible(
                "grid LP is infeasible".into(),
            )))
        }
        LpStatus::Unbounded => {
            return Err(CliError::Solver(GmpError::Domain(
                "grid LP is unbounded".into(),
            )))
        }
    }
    let v = &refinement.values;
    let grid_bound = if v.len() >= 2 {
        (v[v.len() - 1] - v[v.len() - 2]).abs()
    } else {
        0.0
    };
    Ok(OracleRun {
        refinement,
        grid_bound,
    })
}

fn oracle_certified(
    target: &Target,
    overrides: &OracleOverrides,
    opts: &Options,
    eps: f64,
) -> Result<Certified, CliError> {
    let run = run_oracle(target, overrides, opts, eps)?;
    let r = run.refinement.result;
    let dist = r.dist.ok_or_else(|| {
        CliError::Solver(GmpError::Domain("grid LP returned no distribution".into()))
    })?;
    let cert = DualCertificate::new(r.duals)?;
    let gmp = target_gmp(target, dist.max_support().max(r.grid.hi));
    let verification = verify_optimality(&gmp, &dist, &cert, &ToleranceSet::default())?;
    Ok(Certified {
        value: r.value,
        dist,
        cert,
        branch: None,
        root: None,
        iterations: r.pivots,
        verification,
        gmp,
    })
}

/// Solves the instance and verifies the answer. `timing_ms` is left at zero.
pub fn solve(inst: &Instance, opts: &Options) -> Result<ResultEnvelope, CliError> {
    let eps = opts.eps(inst);
    let (c, order_quantity, value) = match &inst.problem {
        Problem::Solver(target) => {
            let c = solve_target(target, eps)?;
            let v = c.value;
            (c, None, v)
        }
        Problem::Oracle(target) => {
            let c = oracle_certified(target, &inst.oracle, opts, eps)?;
            let v = c.value;
            (c, None, v)
        }
        Problem::Newsvendor(nv) => {
            let nv = gmp_core::newsvendor::NewsvendorInstance { eps, ..*nv };
            let d = optimize_order(&nv)?;
            let inner_eps = eps / 100.0;
            let target = match nv.ambiguity {
                Ambiguity::Power { m1, mt, t } => {
                    Target::OneT(OneTInstance::new(m1, mt, t, d.q_star)?)
                }
                Ambiguity::Exponential { m1, me, t } => {
                    Target::OneExp(OneExpInstance::new(m1, me, t, d.q_star)?)
                }
            };
            let mut c = solve_target(&target, inner_eps)?;
            c.iterations = d.golden_iters;
            (c, Some(d.q_star), d.objective)
        }
    };
    let c = c.with_dual_noise(opts.dual_noise)?;
    Ok(ResultEnvelope {
        problem: inst.kind.name().to_string(),
        optimal_value: value,
        distribution: c.dist.atoms().to_vec(),
        dual: c.cert.z.clone(),
        branch: c.branch,
        root: c.root,
        iterations: c.iterations,
        verified: c.verification.pass,
        verification: c.verification,
        timing_ms: 0.0,
        order_quantity,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub problem: String,
    pub solver_value: f64,
    pub oracle_value: f64,
    pub difference: f64,
    pub grid_bound: f64,
    pub oracle_rounds: usize,
    pub oracle_converged: bool,
    pub verification: VerificationReport,
    pub verified: bool,
    pub agree: bool,
}

/// Solver, grid oracle and verifier on the same instance.
pub fn check(inst: &Instance, opts: &Options) -> Result<CheckReport, CliError> {
    let target = match &inst.problem {
        Problem::Solver(t) | Problem::Oracle(t) => t,
        Problem::Newsvendor(_) => {
            return Err(CliError::Schema(
                "check applies to mp1t, mp1e, upm and oracle instances".into(),
            ))
        }
    };
    let eps = opts.eps(inst);
    let solved = solve_target(target, eps)?.with_dual_noise(opts.dual_noise)?;
    let oracle = run_oracle(target, &inst.oracle, opts, eps)?;
    let oracle_value = oracle.refinement.result.value;
    let difference = (solved.value - oracle_value).abs();
    let close = difference <= oracle.grid_bound.max(1e-6);
    Ok(CheckReport {
        problem: inst.kind.name().to_string(),
        solver_value: solved.value,
        oracle_value,
        difference,
        grid_bound: oracle.grid_bound,
        oracle_rounds: oracle.refinement.values.len() - 1,
        oracle_converged: oracle.refinement.converged,
        verified: solved.verification.pass,
        verification: solved.verification,
        agree: close && solved.verification.pass,
    })
}
