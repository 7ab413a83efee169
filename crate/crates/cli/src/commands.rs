use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use popstack_asym::{analyze, default_grid, growth_constants, AsymError, SingularityEstimate};
use popstack_core::ring::BigIntRing;
use popstack_core::{CoreError, CountParallelOptions};
use popstack_fit::{
    fit_algebraic_with, fit_dfinite_with, fit_rational_with, transform_chain, transform_series,
    FitError, FitOptions, FitOutcome, Transform,
};

use crate::args::{
    AsymptoteArgs, BackendArg, BruteArgs, CountArgs, CountByRunsArgs, FamilyArg, GuessArgs,
};
use crate::error::CliError;
use crate::io;

pub fn count(args: &CountArgs) -> Result<(), CliError> {
    let n = args.max_n as usize;
    let values = match args.backend {
        BackendArg::Bigint => popstack_core::count_sequence(&BigIntRing, n),
        BackendArg::Modular => {
            let options = CountParallelOptions { checkpoint_dir: args.checkpoint_dir.clone() };
            popstack_core::count_parallel_with(n, args.workers as usize, args.prime_ceiling, &options)
                .map_err(|e| counting_failed(e, n))?
        }
    };
    io::emit(args.output.as_deref(), &io::bfile_text(1, &values), "count")
}

pub fn count_by_runs(args: &CountByRunsArgs) -> Result<(), CliError> {
    let n = args.max_n as usize;
    let k = args.k_max.unwrap_or(args.max_n) as usize;
    let matrix = match args.backend {
        BackendArg::Bigint => popstack_core::count_by_runs(&BigIntRing, n, k),
        BackendArg::Modular => {
            popstack_core::count_by_runs_parallel(n, k, args.workers as usize, args.prime_ceiling)
        }
    }
    .map_err(|e| counting_failed(e, n))?;
    io::emit(args.output.as_deref(), &io::matrix_text(&matrix), "count-by-runs")
}

/// Resource exhaustion reports the attempted length; a bad bound is on the
/// request itself.
fn counting_failed(err: CoreError, n: usize) -> CliError {
    match err {
        CoreError::BadRunBound { .. } => CliError::Precondition(err.to_string()),
        _ => CliError::Resource(format!("counting up to n = {n}: {err}")),
    }
}

pub fn brute(args: &BruteArgs) -> Result<(), CliError> {
    let n = args.n as usize;
    let report =
        popstack_core::brute_count(n).map_err(|e| CliError::Precondition(e.to_string()))?;
    println!("n {n}");
    println!("total {}", report.total);
    for (k, count) in &report.by_runs {
        println!("runs {k} {count}");
    }
    let Some(path) = args.check_against.as_deref() else { return Ok(()) };
    let bfile = io::read_bfile(path)?;
    let Some(expected) = bfile.get(args.n) else {
        return Err(CliError::Precondition(format!(
            "{} has no entry for n = {n}",
            path.display()
        )));
    };
    if *expected != BigInt::from(report.total) {
        return Err(CliError::Mismatch(format!(
            "n = {n}: brute-force total {} but {} says {expected}",
            report.total,
            path.display()
        )));
    }
    println!("check {}: total agrees", path.display());
    Ok(())
}

pub fn guess(args: &GuessArgs) -> Result<(), CliError> {
    let bfile = io::read_bfile(&args.input)?;
    let base = bfile.series()?;
    let chain: Vec<Transform> = args.transforms.iter().map(|t| t.to_transform()).collect();
    let series = transform_chain(&base, &chain).map_err(transform_failed)?;
    let options = FitOptions { presolve_prime: args.presolve_prime };
    let (d_max, margin) = (args.d_max as usize, args.margin as usize);
    let text = match args.family {
        FamilyArg::Rational => {
            render(fit_rational_with(&series, d_max, margin, &options).map_err(fit_failed)?)
        }
        FamilyArg::Algebraic => render(
            fit_algebraic_with(&series, args.m_max as usize, d_max, margin, &options)
                .map_err(fit_failed)?,
        ),
        FamilyArg::Dfinite => render(
            fit_dfinite_with(&series, args.k_max as usize, d_max, margin, &options)
                .map_err(fit_failed)?,
        ),
    };
    io::emit(args.output.as_deref(), &text, "guess")
}

/// A negative certificate is a finding, not a failure; both arms exit 0.
fn render<T: fmt::Display>(outcome: FitOutcome<T>) -> String {
    match outcome {
        FitOutcome::Fit(fit) => format!("{fit}\n"),
        FitOutcome::Negative(cert) => format!("{cert}\n"),
    }
}

/// Transform preconditions are user-fixable, so say how.
fn transform_failed(err: FitError) -> CliError {
    let hint = match &err {
        FitError::Transform { transform: "reciprocal", .. } => {
            "; hint: the constant term must be nonzero, so feed a file indexed from 0 or chain another transform first"
        }
        FitError::Transform { transform: "revert", .. } => {
            "; hint: reversion needs a_0 = 0 and a_1 != 0, as in a counting sequence indexed from 1"
        }
        _ => "",
    };
    CliError::Precondition(format!("{err}{hint}"))
}

fn fit_failed(err: FitError) -> CliError {
    match err {
        FitError::Solver { .. } => CliError::Resource(err.to_string()),
        _ => CliError::Precondition(err.to_string()),
    }
}

pub fn asymptote(args: &AsymptoteArgs) -> Result<(), CliError> {
    let bfile = io::read_bfile(&args.input)?;
    if bfile.values.len() < 50 {
        return Err(CliError::Precondition(format!(
            "asymptotic analysis needs at least 50 terms, got {}",
            bfile.values.len()
        )));
    }
    let counting = bfile.series()?;
    let egf = transform_series(&counting, Transform::Egf).map_err(transform_failed)?;
    let mut grid = default_grid(&egf);
    for config in &mut grid {
        config.precision_bits = args.precision_bits as u32;
    }
    let estimates = analyze(&egf, &grid).map_err(analysis_failed)?;

    let mut text = String::new();
    writeln!(text, "approximants: {}", grid.len()).expect("write to string");
    writeln!(text, "singularities: {}", estimates.len()).expect("write to string");
    for e in &estimates {
        writeln!(text, "  {e}").expect("write to string");
    }
    let dominant = dominant_real(&estimates).ok_or_else(|| {
        CliError::Resource("no positive real dominant singularity emerged from the grid".into())
    })?;
    let growth =
        growth_constants(&counting, &dominant.location.re).map_err(analysis_failed)?;
    writeln!(text, "growth:").expect("write to string");
    writeln!(text, "  mu     = {}", growth.mu).expect("write to string");
    writeln!(text, "  mu-inv = {}", growth.mu_inv).expect("write to string");
    let note = if growth.partial { ", partial: fewer than 50 terms" } else { "" };
    writeln!(text, "  C      = {}  ({} stable digits{note})", growth.c, growth.c_digits)
        .expect("write to string");
    io::emit(args.output.as_deref(), &text, "asymptote")
}

/// Smallest-modulus cluster on the positive real axis, preferring one that
/// several approximants agree on. Estimates arrive sorted by modulus.
fn dominant_real(estimates: &[SingularityEstimate]) -> Option<&SingularityEstimate> {
    let positive_real = |e: &&SingularityEstimate| {
        e.location.im.to_f64().abs() < 1e-6
            && !e.location.re.is_negative()
            && !e.location.re.is_zero()
    };
    estimates
        .iter()
        .filter(|e| e.contributors.len() >= 3)
        .find(positive_real)
        .or_else(|| estimates.iter().find(positive_real))
}

fn analysis_failed(err: AsymError) -> CliError {
    match err {
        AsymError::InsufficientTerms { .. } | AsymError::BadInput { .. } => {
            CliError::Precondition(err.to_string())
        }
        _ => CliError::Resource(err.to_string()),
    }
}
