use std::fmt;

use gmp_core::GmpError;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable file, malformed JSON, unknown keys or out-of-domain parameters.
    Schema(String),
    Solver(GmpError),
    /// Some sweep rows failed; the CSV has already been written.
    SweepRows(usize),
    Disagreement(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Solver(GmpError::Infeasible(_)) => 3,
            CliError::Solver(GmpError::Range(_)) => 4,
            CliError::Solver(_) => 1,
            CliError::SweepRows(_) => 5,
            CliError::Disagreement(_) => 6,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Solver(GmpError::Infeasible(_)) => "infeasible",
            CliError::Solver(GmpError::Range(_)) => "range",
            CliError::Solver(_) => "solver",
            CliError::SweepRows(_) => "sweep",
            CliError::Disagreement(_) => "disagreement",
            CliError::Io(_) => "io",
        }
    }

    /// Error report printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .unwrap_or_default()
    }

    /// Parameter validation errors are schema errors; infeasibility and range
    /// rejections keep their own exit codes.
    pub fn from_validation(e: GmpError) -> Self {
        match e {
            GmpError::Infeasible(_) | GmpError::Range(_) => CliError::Solver(e),
            other => CliError::Schema(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "invalid instance: {m}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::SweepRows(n) => write!(f, "{n} sweep row(s) failed"),
            CliError::Disagreement(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GmpError> for CliError {
    fn from(e: GmpError) -> Self {
        CliError::Solver(e)
    }
}
