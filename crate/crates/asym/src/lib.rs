//! Asymptotics of counting sequences via differential approximants.
//!
//! The pipeline: take exact series terms, fit an ODE with polynomial
//! coefficients to a window of them ([`differential_approximant`]), read the
//! singularity structure off the leading polynomial ([`singularities`]),
//! pool estimates across a grid of approximant shapes ([`analyze`]), and
//! extrapolate the growth constant of the normalized counting sequence
//! ([`growth_constants`]).
//!
//! Coefficient arithmetic is exact; floating point enters only at root
//! finding, through the binary fixed-point type [`Fixed`] whose precision is
//! set per call.

pub mod approximant;
pub mod fixed;
pub mod growth;
pub mod singularity;

pub use approximant::{default_grid, differential_approximant, ApproximantConfig};
pub use fixed::{agreed_digits, agreed_digits_complex, CFixed, Fixed, DEFAULT_PRECISION_BITS};
pub use growth::{growth_constants, GrowthEstimate};
pub use singularity::{analyze, singularities, SingularityEstimate};

use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum AsymError {
    #[error("need at least {needed} series terms, got {got}")]
    InsufficientTerms { needed: usize, got: usize },
    #[error("no nontrivial ODE at order {order}, degree {degree}; adjust the shape")]
    NoSolution { order: usize, degree: usize },
    #[error("leading polynomial of the ODE is zero; the data admits a shorter description")]
    ZeroLeadingPolynomial,
    #[error("root finding failed: {message}")]
    RootFinding { message: String },
    #[error("every approximant in the grid failed: {message}")]
    AllFailed { message: String },
    #[error("bad input: {message}")]
    BadInput { message: String },
    #[error(transparent)]
    Fit(#[from] popstack_fit::FitError),
}
