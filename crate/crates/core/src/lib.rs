//! Exact counting of pop-stacked permutations.
//!
//! A pop-stack sorting pass factors a permutation into maximal descending
//! runs and reverses each run in place. The permutations reachable by one
//! such pass (the image of the pass operator) are the *pop-stacked*
//! permutations; this crate counts them.
//!
//! The crate has three layers:
//!
//! * [`perm`] and [`ballot`]: the combinatorial objects themselves, the pass
//!   operator, and a brute-force enumeration oracle ([`brute`]) usable up to
//!   n = 12.
//! * [`dp`]: polynomial-time recurrences on counts indexed by the minimum
//!   and maximum of the final ascending run, in a slow literal form and a
//!   prefix-sum form that runs in O(n^4) time and O(n^3) space. Both are
//!   generic over a coefficient [`ring::Ring`], so the same code produces
//!   exact big integers or residues modulo a word-sized prime.
//! * [`modular`]: a backend that runs the prefix-sum recurrence over a basis
//!   of primes whose product exceeds n! and reconstructs exact values by the
//!   Chinese remainder theorem, optionally in a fixed-size thread pool with
//!   per-prime checkpoints.

pub mod ballot;
pub mod brute;
pub mod dp;
pub mod modular;
pub mod perm;
pub mod ring;

pub use ballot::{ballot_to_perm, is_overlapping, perm_to_ballot, Ballot};
pub use brute::{brute_count, BruteCountReport, BRUTE_MAX_N};
pub use dp::{
    count_by_runs, count_by_runs_streaming, count_sequence, count_slow_reference, prefix_table,
    CountMatrix, PrefixTable, SLOW_REFERENCE_MAX_N,
};
pub use modular::{
    count_by_runs_parallel, count_parallel, count_parallel_with, crt_reconstruct, select_primes,
    CountParallelOptions, PrimeBasis, ResidueBundle, DEFAULT_PRIME_CEILING,
};
pub use perm::{
    decompose_runs, is_pop_stacked, is_sortable_k, pop_stack, Direction, Permutation,
    RunDecomposition,
};

use thiserror::Error;

/// Errors for construction, guard, and backend failures in this crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("value {value} is invalid or repeated in a permutation of length {len}")]
    NotAPermutation { value: u32, len: usize },
    #[error("cannot parse {input:?} as a permutation")]
    PermutationParse { input: String },
    #[error("blocks do not partition 1..={n}")]
    NotAPartition { n: usize },
    #[error("blocks {left} and {right} violate max(left) > min(right); concatenation would merge runs")]
    BlocksNotConcatenable { left: usize, right: usize },
    #[error("brute-force enumeration is limited to n <= {max}, got {n}")]
    BruteGuard { n: usize, max: usize },
    #[error("the slow reference recurrence is limited to n <= {max}, got {n}")]
    SlowReferenceGuard { n: usize, max: usize },
    #[error("k_max must lie in 1..=n_max, got k_max={k_max} with n_max={n_max}")]
    BadRunBound { k_max: usize, n_max: usize },
    #[error("prime ceiling {ceiling} leaves no usable primes")]
    CeilingTooSmall { ceiling: u64 },
    #[error("primes below {ceiling} cannot exceed {n}! in product")]
    PrimePoolExhausted { ceiling: u64, n: usize },
    #[error("duplicate prime {prime} in residue set")]
    DuplicatePrime { prime: u64 },
    #[error("residue {residue} is not reduced modulo {prime}")]
    ResidueOutOfRange { residue: u64, prime: u64 },
    #[error("empty residue set")]
    EmptyResidues,
    #[error("residue sequence for prime {prime} has length {got}, expected {want}")]
    BundleLengthMismatch { prime: u64, got: usize, want: usize },
    #[error("residue bundles do not cover the prime basis exactly")]
    BasisMismatch,
    #[error("worker for prime {prime} failed: {message}")]
    Worker { prime: u64, message: String },
    #[error("thread pool: {message}")]
    Pool { message: String },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
