//! Exact solvers and optimality certificates for generalized moment problems.
//!
//! Three worst-case problems are solved in closed or semi-closed form, each
//! returning an optimal distribution together with a dual certificate that
//! [`verify_optimality`] checks independently:
//!
//! - [`one_t`]: `max E(X − q)_+` given `E X` and `E X^t`;
//! - [`upm`]: `min Var_+` given `E X`, `E X²` and `E (X − q)_+`;
//! - [`one_exp`]: `max E(X − q)_+` given `E X` and `E e^{tX}`.
//!
//! [`oracle`] solves discretized versions by linear programming as a
//! cross-check, and [`newsvendor`] uses the worst-case expectations to pick
//! robust order quantities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gmp;
pub mod lambertw;
pub mod newsvendor;
pub mod one_exp;
pub mod one_t;
pub mod oracle;
pub mod rootfind;
pub mod upm;

pub use error::{GmpError, Result};
pub use gmp::{
    h_derivative, h_function, moments_of, verify_optimality, Atom, DiscreteDistribution,
    DualCertificate, GmpInstance, MomentFunction, Sense, ToleranceSet, VerificationReport,
};
