use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use popstack_asym::DEFAULT_PRECISION_BITS;
use popstack_core::DEFAULT_PRIME_CEILING;
use popstack_fit::{Transform, DEFAULT_PRESOLVE_PRIME};

#[derive(Parser)]
#[command(
    name = "popstack",
    version,
    about = "Count pop-stacked permutations and analyze the counting sequence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Count pop-stacked permutations of each length 1..=N (b-file output)
    Count(CountArgs),
    /// Count by length and number of ascending runs ("n k f(n,k)" triples)
    CountByRuns(CountByRunsArgs),
    /// Enumerate one small length exhaustively; optionally check a b-file
    Brute(BruteArgs),
    /// Fit a rational, algebraic, or D-finite generating function
    Guess(GuessArgs),
    /// Estimate singularities and growth constants from sequence terms
    Asymptote(AsymptoteArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// One dynamic program over big integers
    Bigint,
    /// Per-prime residues in parallel, recombined by CRT
    Modular,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Rational,
    Algebraic,
    Dfinite,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TransformArg {
    /// Divide a_n by n!
    Egf,
    /// Replace F by 1/F (needs a_0 != 0)
    Reciprocal,
    /// Compositional inverse (needs a_0 = 0 and a_1 != 0)
    Revert,
}

impl TransformArg {
    pub fn to_transform(self) -> Transform {
        match self {
            TransformArg::Egf => Transform::Egf,
            TransformArg::Reciprocal => Transform::Reciprocal,
            TransformArg::Revert => Transform::Revert,
        }
    }
}

#[derive(Args)]
pub struct CountArgs {
    /// Largest length N
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_n: u64,
    #[arg(long, value_enum, default_value = "bigint")]
    pub backend: BackendArg,
    /// Worker threads (modular backend)
    #[arg(long, env = "POPSTACK_WORKERS", default_value_t = 1,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Primes are taken descending from just below this bound (modular backend)
    #[arg(long, default_value_t = DEFAULT_PRIME_CEILING,
          value_parser = clap::value_parser!(u64).range(3..))]
    pub prime_ceiling: u64,
    /// Reuse and write per-prime residue files here (modular backend)
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// Write the b-file here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct CountByRunsArgs {
    /// Largest length N
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_n: u64,
    /// Largest run count K (default N); needs K <= N
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: Option<u64>,
    #[arg(long, value_enum, default_value = "bigint")]
    pub backend: BackendArg,
    /// Worker threads (modular backend)
    #[arg(long, env = "POPSTACK_WORKERS", default_value_t = 1,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Primes are taken descending from just below this bound (modular backend)
    #[arg(long, default_value_t = DEFAULT_PRIME_CEILING,
          value_parser = clap::value_parser!(u64).range(3..))]
    pub prime_ceiling: u64,
    /// Write the triples here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct BruteArgs {
    /// Length to enumerate (guarded at 12)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Compare the total against this b-file's entry for n; mismatch exits 5
    #[arg(long)]
    pub check_against: Option<PathBuf>,
}

#[derive(Args)]
pub struct GuessArgs {
    /// Input b-file (indices from 0, or from 1 for a counting sequence)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "rational")]
    pub family: FamilyArg,
    /// Apply before fitting; repeat to chain
    #[arg(long = "transform", value_enum)]
    pub transforms: Vec<TransformArg>,
    /// Degree bound for the polynomials of the ansatz
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub d_max: u64,
    /// Polynomial order bound (algebraic family)
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub m_max: u64,
    /// ODE order bound (d-finite family)
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: u64,
    /// Terms held back from the largest admissible system; they confirm
    /// any candidate before it is reported
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub margin: u64,
    /// Prime for the modular pre-solve screen
    #[arg(long, default_value_t = DEFAULT_PRESOLVE_PRIME)]
    pub presolve_prime: u64,
    /// Write the fit or certificate here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct AsymptoteArgs {
    /// Input b-file with at least 50 terms
    #[arg(long)]
    pub input: PathBuf,
    /// Working precision for singularity refinement
    #[arg(long, env = "POPSTACK_PRECISION_BITS",
          default_value_t = DEFAULT_PRECISION_BITS as u64,
          value_parser = clap::value_parser!(u64).range(64..=16384))]
    pub precision_bits: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}
