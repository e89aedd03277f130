use thiserror::Error;

/// Errors raised by the solvers, the verifier and the LP oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GmpError {
    /// Moment parameters do not describe a non-degenerate feasible instance.
    #[error("infeasible instance: {0}")]
    Infeasible(String),

    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector lengths disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A function evaluated to NaN or an infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The endpoints handed to bisection do not bracket a root.
    #[error("root not bracketed: f(a) = {fa:e}, f(b) = {fb:e}")]
    Bracket { fa: f64, fb: f64 },

    /// A solver-internal bisection bracket violated its analytic sign guarantees.
    #[error("root bracket violated: {0}")]
    RootBracket(String),

    /// Bracket doubling failed to find `f(a) < f(b)`.
    #[error("bracket expansion failed after {0} doublings")]
    Expansion(usize),

    /// Inputs would overflow IEEE double arithmetic.
    #[error("numeric range exceeded: {0}")]
    Range(String),

    /// A degenerate-family support parameter is below its admissible bound.
    #[error("family parameter v1 = {v1} is below the admissible bound {bound}")]
    FamilyParam { v1: f64, bound: f64 },

    /// The requested operation does not apply to this branch of the solution.
    #[error("wrong branch: {0}")]
    Branch(String),

    /// A point is not differentiable for the requested function.
    #[error("not differentiable at x = {0}")]
    NonDifferentiable(f64),

    #[error("unsupported demand family: {0}")]
    UnsupportedFamily(String),
}

pub type Result<T> = std::result::Result<T, GmpError>;
