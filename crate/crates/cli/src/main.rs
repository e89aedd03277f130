//! `gmpsolve`: solve, sweep and cross-check moment problems described by JSON
//! instance files.
//!
//! Exit codes: 0 success, 2 schema violation, 3 infeasible instance, 4 numeric
//! range rejection (for example `t*q > 700`), 5 failed sweep rows, 6 solver and
//! oracle disagree or the certificate fails verification, 1 anything else.

mod error;
mod instance;
mod run;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::instance::Instance;
use crate::run::Options;

#[derive(Parser)]
#[command(
    name = "gmpsolve",
    version,
    about = "Certified solvers for moment problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the result envelope as JSON.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve along a grid of one parameter and write CSV.
    Sweep {
        instance: PathBuf,
        /// Name of a numeric entry of `params`, e.g. `q` or `eta`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the solver with the grid LP oracle and verify the certificate.
    Check {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Solver tolerance, overriding the instance file.
    #[arg(long)]
    tol: Option<f64>,
    /// Base number of oracle grid points.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Add the solver's support to the oracle grid (default).
    #[arg(long, overrides_with = "no_seed_support")]
    seed_support: bool,
    #[arg(long, overrides_with = "seed_support")]
    no_seed_support: bool,
    #[arg(long, hide = true, allow_negative_numbers = true)]
    inject_dual_noise: Option<f64>,
}

impl Common {
    fn options(&self) -> Result<Options, CliError> {
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Schema(format!(
                    "--tol must be positive, got {tol}"
                )));
            }
        }
        let seed_support = if self.no_seed_support {
            Some(false)
        } else if self.seed_support {
            Some(true)
        } else {
            None
        };
        Ok(Options {
            tol: self.tol,
            grid_points: self.grid_points,
            seed_support,
            dual_noise: self.inject_dual_noise,
        })
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Io(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { instance, common } => {
            let opts = common.options()?;
            let inst = Instance::from_path(&instance)?;
            let start = Instant::now();
            let mut env = run::solve(&inst, &opts)?;
            env.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            print_json(&env)?;
            eprintln!(
                "{}: value {} ({}), {}",
                env.problem,
                env.optimal_value,
                env.branch.as_deref().unwrap_or("grid"),
                if env.verified {
                    "verified"
                } else {
                    "NOT verified"
                }
            );
            Ok(())
        }
        Command::Sweep {
            instance,
            param,
            from,
            to,
            steps,
            csv,
            common,
        } => {
            let opts = common.options()?;
            let inst = Instance::from_path(&instance)?;
            let points = sweep::sweep_points(from, to, steps)?;
            let (rows, failed) = sweep::sweep(&inst, &param, &points, &opts)?;
            match csv {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| {
                        CliError::Io(format!("cannot create {}: {e}", path.display()))
                    })?;
                    sweep::write_csv(&rows, BufWriter::new(file))?;
                }
                None => sweep::write_csv(&rows, io::stdout().lock())?,
            }
            eprintln!("{}: {} rows, {failed} failed", inst.kind.name(), rows.len());
            if failed > 0 {
                return Err(CliError::SweepRows(failed));
            }
            Ok(())
        }
        Command::Check { instance, common } => {
            let opts = common.options()?;
            let inst = Instance::from_path(&instance)?;
            let report = run::check(&inst, &opts)?;
            print_json(&report)?;
            eprintln!(
                "{}: solver {} oracle {} difference {:e} verification {}",
                report.problem,
                report.solver_value,
                report.oracle_value,
                report.difference,
                if report.verified { "passed" } else { "failed" }
            );
            if !report.agree {
                return Err(CliError::Disagreement(format!(
                    "solver {} and oracle {} differ by {:e} (allowed {:e}), verification {}",
                    report.solver_value,
                    report.oracle_value,
                    report.difference,
                    report.grid_bound.max(1e-6),
                    if report.verified { "passed" } else { "failed" }
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Schema(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
