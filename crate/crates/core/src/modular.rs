//! Multi-prime execution of the counting recurrences with CRT merge.
//!
//! Exact values of f(n) grow like n!, so a big-integer run spends most of
//! its time in arbitrary-precision arithmetic. Running the same recurrence
//! modulo a basis of word-sized primes whose product exceeds n! keeps every
//! operation native, parallelizes perfectly across primes, and loses
//! nothing: the Chinese remainder theorem recovers the exact integers.
//!
//! [`select_primes`] builds the basis, [`count_parallel`] runs one prime
//! per task on a fixed-size pool and merges deterministically, and
//! [`crt_reconstruct`] is the position-wise merge. Workers can persist
//! their residue sequences to a checkpoint directory so an interrupted
//! multi-prime run only recomputes missing primes.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dp::{self, CountMatrix};
use crate::ring::FpRing;
use crate::CoreError;

/// Default upper bound (exclusive) for basis primes. Residues below 2^31
/// multiply within u64, so the DP inner loop needs no wide arithmetic.
pub const DEFAULT_PRIME_CEILING: u64 = 1 << 31;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the fixed base set decides every u64.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn factorial(n: usize) -> BigInt {
    let mut f = BigInt::one();
    for i in 2..=n {
        f *= BigInt::from(i);
    }
    f
}

/// A CRT basis: distinct primes, largest first, with their product.
#[derive(Clone, Debug)]
pub struct PrimeBasis {
    primes: Vec<u64>,
    modulus_product: BigInt,
}

impl PrimeBasis {
    /// Builds a basis from explicit primes (deduplicated order preserved).
    /// Panics if a listed value is not prime; duplicates are an error.
    pub fn from_primes(primes: Vec<u64>) -> Result<Self, CoreError> {
        let mut seen = std::collections::HashSet::new();
        let mut modulus_product = BigInt::one();
        for &p in &primes {
            assert!(is_prime(p), "PrimeBasis::from_primes given non-prime {p}");
            if !seen.insert(p) {
                return Err(CoreError::DuplicatePrime { prime: p });
            }
            modulus_product *= BigInt::from(p);
        }
        Ok(PrimeBasis {
            primes,
            modulus_product,
        })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn modulus_product(&self) -> &BigInt {
        &self.modulus_product
    }
}

/// The largest primes strictly below `ceiling`, descending, stopping as
/// soon as their product exceeds n!.
pub fn select_primes(n: usize, ceiling: u64) -> Result<PrimeBasis, CoreError> {
    if ceiling < 3 {
        return Err(CoreError::CeilingTooSmall { ceiling });
    }
    let target = factorial(n);
    let mut primes = Vec::new();
    let mut product = BigInt::one();
    let mut candidate = ceiling - 1;
    while product <= target {
        while candidate >= 2 && !is_prime(candidate) {
            candidate -= 1;
        }
        if candidate < 2 {
            return Err(CoreError::PrimePoolExhausted { ceiling, n });
        }
        primes.push(candidate);
        product *= BigInt::from(candidate);
        candidate -= 1;
    }
    Ok(PrimeBasis {
        primes,
        modulus_product: product,
    })
}

/// One prime's residue sequence, every entry reduced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueBundle {
    prime: u64,
    residues: Vec<u64>,
}

impl ResidueBundle {
    pub fn new(prime: u64, residues: Vec<u64>) -> Result<Self, CoreError> {
        if let Some(&r) = residues.iter().find(|&&r| r >= prime) {
            return Err(CoreError::ResidueOutOfRange { residue: r, prime });
        }
        Ok(ResidueBundle { prime, residues })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }
}

/// Merges residue sequences position by position into the unique integers
/// in [0, Π p). Bundles must cover the basis primes exactly and agree in
/// length; the merge itself runs over primes in descending order, so the
/// result does not depend on bundle order.
pub fn crt_reconstruct(
    bundles: &[ResidueBundle],
    basis: &PrimeBasis,
) -> Result<Vec<BigInt>, CoreError> {
    if bundles.is_empty() {
        return Err(CoreError::EmptyResidues);
    }
    let mut by_prime: HashMap<u64, &ResidueBundle> = HashMap::new();
    for b in bundles {
        if by_prime.insert(b.prime, b).is_some() {
            return Err(CoreError::DuplicatePrime { prime: b.prime });
        }
    }
    if by_prime.len() != basis.len() || basis.primes().iter().any(|p| !by_prime.contains_key(p)) {
        return Err(CoreError::BasisMismatch);
    }
    let len = bundles[0].residues.len();
    for b in bundles {
        if b.residues.len() != len {
            return Err(CoreError::BundleLengthMismatch {
                prime: b.prime,
                got: b.residues.len(),
                want: len,
            });
        }
    }

    let mut order: Vec<u64> = basis.primes().to_vec();
    order.sort_unstable_by(|a, b| b.cmp(a));

    // Incremental reconstruction: after step j, x is the unique value
    // modulo the product of the first j primes. The per-prime inverse of
    // that running product is position-independent, so hoist it.
    let mut step_product: Vec<BigInt> = Vec::with_capacity(order.len());
    let mut step_inverse: Vec<u64> = Vec::with_capacity(order.len());
    let mut running = BigInt::one();
    for &p in &order {
        let rem = bigint_rem_u64(&running, p);
        step_product.push(running.clone());
        step_inverse.push(pow_mod(rem, p - 2, p));
        running *= BigInt::from(p);
    }

    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let mut x = BigInt::zero();
        for (j, &p) in order.iter().enumerate() {
            let r = by_prime[&p].residues[i];
            let x_mod = bigint_rem_u64(&x, p);
            let delta = if r >= x_mod { r - x_mod } else { r + p - x_mod };
            let t = mul_mod(delta, step_inverse[j], p);
            x += BigInt::from(t) * &step_product[j];
        }
        out.push(x);
    }
    Ok(out)
}

fn bigint_rem_u64(x: &BigInt, p: u64) -> u64 {
    use num_traits::ToPrimitive;
    let r = x % BigInt::from(p);
    r.to_u64().expect("nonnegative remainder fits u64")
}

/// Options for the parallel drivers.
#[derive(Clone, Debug, Default)]
pub struct CountParallelOptions {
    /// Directory of per-prime residue files. A file whose header matches
    /// the requested prime and length is trusted and not recomputed;
    /// completed workers write theirs here.
    pub checkpoint_dir: Option<PathBuf>,
}

fn checkpoint_path(dir: &Path, prime: u64) -> PathBuf {
    dir.join(format!("residues-{prime}.txt"))
}

fn checkpoint_error(path: &Path, message: impl Into<String>) -> CoreError {
    CoreError::Checkpoint {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn write_checkpoint(dir: &Path, bundle: &ResidueBundle) -> Result<(), CoreError> {
    std::fs::create_dir_all(dir)?;
    let mut text = format!("{} {}\n", bundle.prime, bundle.residues.len());
    for (i, r) in bundle.residues.iter().enumerate() {
        text.push_str(&format!("{} {}\n", i + 1, r));
    }
    // Write-then-rename so a killed worker cannot leave a partial file
    // that a resumed run would trust.
    let tmp = dir.join(format!("residues-{}.tmp", bundle.prime));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, checkpoint_path(dir, bundle.prime))?;
    Ok(())
}

/// Ok(None) when the file is absent or records a different sequence
/// length (stale run); malformed content is an error, not a silent
/// recompute.
fn read_checkpoint(dir: &Path, prime: u64, len: usize) -> Result<Option<ResidueBundle>, CoreError> {
    let path = checkpoint_path(dir, prime);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| checkpoint_error(&path, "empty file"))?;
    let mut parts = header.split_whitespace();
    let file_prime: u64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| checkpoint_error(&path, "bad header"))?;
    let file_len: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| checkpoint_error(&path, "bad header"))?;
    if parts.next().is_some() {
        return Err(checkpoint_error(&path, "bad header"));
    }
    if file_prime != prime {
        return Err(checkpoint_error(
            &path,
            format!("header prime {file_prime} does not match file name"),
        ));
    }
    if file_len != len {
        return Ok(None);
    }
    let mut residues = Vec::with_capacity(len);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let idx: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| checkpoint_error(&path, "bad data line"))?;
        let value: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| checkpoint_error(&path, "bad data line"))?;
        if parts.next().is_some() || idx != residues.len() + 1 {
            return Err(checkpoint_error(&path, format!("bad data line at n={idx}")));
        }
        residues.push(value);
    }
    if residues.len() != len {
        return Err(checkpoint_error(
            &path,
            format!("expected {len} residues, found {}", residues.len()),
        ));
    }
    ResidueBundle::new(prime, residues).map(Some).map_err(|e| checkpoint_error(&path, e.to_string()))
}

/// Runs `job` once per basis prime on a pool of `workers` threads, with
/// checkpoint reuse, and returns bundles in basis order.
fn run_workers(
    basis: &PrimeBasis,
    workers: usize,
    options: &CountParallelOptions,
    residue_len: usize,
    job: impl Fn(u64) -> Vec<u64> + Sync,
) -> Result<Vec<ResidueBundle>, CoreError> {
    assert!(workers >= 1, "worker count must be at least 1");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CoreError::Pool {
            message: e.to_string(),
        })?;
    let results: Vec<Result<ResidueBundle, CoreError>> = pool.install(|| {
        basis
            .primes()
            .par_iter()
            .map(|&p| {
                if let Some(dir) = &options.checkpoint_dir {
                    if let Some(bundle) = read_checkpoint(dir, p, residue_len)? {
                        return Ok(bundle);
                    }
                }
                let bundle = ResidueBundle::new(p, job(p)).map_err(|e| CoreError::Worker {
                    prime: p,
                    message: e.to_string(),
                })?;
                if let Some(dir) = &options.checkpoint_dir {
                    write_checkpoint(dir, &bundle)?;
                }
                Ok(bundle)
            })
            .collect()
    });
    // Keyed merge in basis order; par_iter happens to preserve order, but
    // determinism should not hinge on that.
    let mut by_prime: HashMap<u64, ResidueBundle> = HashMap::new();
    for r in results {
        let b = r?;
        by_prime.insert(b.prime, b);
    }
    Ok(basis
        .primes()
        .iter()
        .map(|p| by_prime.remove(p).expect("every basis prime ran"))
        .collect())
}

/// f(1..=n) exactly, via one modular DP per basis prime and a CRT merge.
/// Output is identical for any worker count.
pub fn count_parallel(n: usize, workers: usize, ceiling: u64) -> Result<Vec<BigInt>, CoreError> {
    count_parallel_with(n, workers, ceiling, &CountParallelOptions::default())
}

/// [`count_parallel`] with checkpointing options.
pub fn count_parallel_with(
    n: usize,
    workers: usize,
    ceiling: u64,
    options: &CountParallelOptions,
) -> Result<Vec<BigInt>, CoreError> {
    let basis = select_primes(n, ceiling)?;
    let bundles = run_workers(&basis, workers, options, n, |p| {
        dp::count_sequence(&FpRing::new(p), n)
    })?;
    crt_reconstruct(&bundles, &basis)
}

/// f(n, k) for n ≤ n_max, k ≤ k_max exactly, one modular by-runs DP per
/// prime. Residue matrices travel flattened column-by-column through the
/// same CRT merge; this path does not checkpoint.
pub fn count_by_runs_parallel(
    n_max: usize,
    k_max: usize,
    workers: usize,
    ceiling: u64,
) -> Result<CountMatrix<BigInt>, CoreError> {
    if k_max == 0 || k_max > n_max {
        return Err(CoreError::BadRunBound { k_max, n_max });
    }
    let basis = select_primes(n_max, ceiling)?;
    let options = CountParallelOptions::default();
    let bundles = run_workers(&basis, workers, &options, n_max * k_max, |p| {
        let mut flat = Vec::with_capacity(n_max * k_max);
        dp::count_by_runs_streaming(&FpRing::new(p), n_max, k_max, |_, col| flat.extend(col))
            .expect("bounds checked above");
        flat
    })?;
    let flat = crt_reconstruct(&bundles, &basis)?;
    let cols = flat.chunks_exact(n_max).map(|c| c.to_vec()).collect();
    Ok(CountMatrix::from_columns(n_max, cols))
}
