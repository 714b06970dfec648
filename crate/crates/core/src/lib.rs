//! Principal eigenvalues of one-dimensional nonlocal dispersal operators with drift.
//!
//! The operator acting on a positive function `phi` over an interval `Omega` is
//!
//! ```text
//! q(x) phi'(x) + \int_Omega J(x, y) phi(y) dy + a(x) phi(x)
//! ```
//!
//! and the principal eigenvalue `lambda` is the number for which the operator plus
//! `lambda * phi` vanishes with `phi > 0`. Sign convention throughout the crate:
//! `A phi = -lambda phi`, so `lambda` is minus the Perron value of the discrete
//! operator `A`.
//!
//! Module map:
//!
//! * [`problem`]: continuous data (interval, kernel, coefficients), validation of the
//!   standing assumptions, pointwise operator evaluation.
//! * [`discretize`]: uniform grid, trapezoid weights, upwind/Nyström assembly.
//! * [`eigsolve`]: Collatz-Wielandt certified Perron solver and the reflection path.
//! * [`certify`]: structural property checks of the principal eigenvalue.
//! * [`harnack`]: explicit Harnack constant chain and its verification.
//! * [`exhaust`]: growing-domain limit on unbounded intervals.
//! * [`kpp`]: moving-frame KPP persistence demo.
//! * [`io`]: problem files, result records and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod certify;
pub mod discretize;
pub mod eigsolve;
mod error;
pub mod exhaust;
pub mod functions;
pub mod harnack;
pub mod io;
pub mod kpp;
pub mod linalg;
pub mod par;
pub mod problem;
pub mod quadrature;

pub use discretize::{assemble, build_grid, BcSide, DiscreteOperator, Grid};
pub use eigsolve::{
    perron, reflect, solve_principal, solve_via_reflection, Eigenpair, Method, PrincipalSolution,
    SeedVector, SolverConfig,
};
pub use error::{Error, Result};
pub use functions::{Coefficient, Kernel};
pub use linalg::MetzlerMatrix;
pub use problem::{
    apply_operator, rayleigh_bracket, validate, CoefficientSpec, Interval, KernelSpec, ProblemSpec,
    QSign, SampledFunction, ValidationReport,
};
