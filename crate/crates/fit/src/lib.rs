//! Generating-function fitting for integer and rational sequences.
//!
//! Given the initial terms a_0..a_n of a sequence, the crate searches for an
//! exact annihilating ansatz in three nested families:
//!
//! * rational: q(x)·F(x) − p(x) = 0,
//! * algebraic: p_0(x) + p_1(x)·F + … + p_m(x)·F^m = 0,
//! * D-finite: p_0(x)·F + p_1(x)·F′ + … + p_k(x)·F^(k) + q(x) = 0,
//!
//! where F is the ordinary generating function of the terms. Candidate
//! parameter cells are screened over a fixed word-sized prime field; only
//! cells with a nontrivial modular kernel are re-solved exactly over the
//! rationals (multi-prime CRT plus rational reconstruction), and every
//! returned fit is verified against all supplied terms by exact arithmetic.
//! When the whole searched region is exhausted the result is a
//! [`NegativeCertificate`] naming the frontier cells whose systems have full
//! column rank, which is re-checkable with an independent prime.
//!
//! All arithmetic in this crate is exact; no floating point is used.

pub mod family;
pub mod fit;
pub mod linalg;
pub mod poly;
pub mod series;

pub use family::{expected_denominator, fit_runs_family, fit_runs_family_with, RunsFitOutcome, RunsFitReport};
pub use fit::{
    fit_algebraic, fit_algebraic_with, fit_dfinite, fit_dfinite_with, fit_rational,
    fit_rational_with, recheck_negative, verify_fit, AlgebraicFit, AnsatzFamily, Cell, DFiniteFit,
    Fit, FitOptions, FitOutcome, NegativeCertificate, RationalFit, SearchedBounds,
};
pub use linalg::DEFAULT_PRESOLVE_PRIME;
pub use poly::Poly;
pub use series::{transform_chain, transform_series, A0Note, SeriesTerms, Transform};

use thiserror::Error;

/// Errors for precondition violations and solver-level failures.
#[derive(Clone, Debug, Error)]
pub enum FitError {
    #[error("{transform} transform: {reason}")]
    Transform {
        transform: &'static str,
        reason: &'static str,
    },
    #[error("need at least {needed} terms for this search, got {got}")]
    InsufficientTerms { needed: usize, got: usize },
    #[error("margin must be at least 1, got {margin}")]
    BadMargin { margin: usize },
    #[error("{message}")]
    Bounds { message: String },
    #[error("{value} is not prime")]
    NotPrime { value: u64 },
    #[error("prime {prime} divides a denominator in the system")]
    UnusablePrime { prime: u64 },
    #[error("linear solver: {message}")]
    Solver { message: String },
}
