//! Exact kernel vectors for fitting systems via prime fields and CRT.
//!
//! Candidate systems are eliminated modulo word-sized primes. The pivot
//! structure (rank, pivot columns, free columns) is always derived from the
//! elimination itself, never by fixing an arbitrary coordinate: a column
//! that looks free under one normalization can make the square subsystem
//! singular even when the kernel is one-dimensional.
//!
//! Two exact modes sit on top of the per-prime solutions:
//!
//! * [`rational_kernel_vector`] normalizes the first free coordinate to 1
//!   and recovers the rational coordinates by rational reconstruction from
//!   the CRT image, confirming against a fresh witness prime. Coordinates of
//!   a kernel vector are ratios of minors, so reconstruction is guaranteed
//!   once the modulus exceeds twice the square of the minor bound; in
//!   practice small solutions stabilize after a couple of primes.
//! * [`integer_kernel_vector`] serves exactly determined systems
//!   (rows = cols − 1): scaling the unit kernel vector by the determinant of
//!   the pivot block makes every coordinate a signed maximal minor, hence an
//!   integer, so plain CRT plus a symmetric lift suffices and the result is
//!   verified against the exact integer rows.
//!
//! Primes where the pivot structure degenerates (the prime divides a leading
//! minor or a denominator) are discarded; rank can only drop modulo a prime,
//! so any prime exhibiting a larger rank re-anchors the structure.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use popstack_core::modular::is_prime;
use popstack_core::ring::{bigint_mod, FpRing, Ring};

use crate::FitError;

/// Modular pre-solve prime: the Mersenne prime 2^61 − 1. Deterministic by
/// default, overridable for testing.
pub const DEFAULT_PRESOLVE_PRIME: u64 = (1 << 61) - 1;

/// A linear system that can be materialized modulo any prime.
pub trait LinearSystem {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Row-major matrix of the system reduced mod the prime, or None when
    /// the prime divides a denominator; callers skip such primes.
    fn fill(&self, fp: &FpRing) -> Option<Vec<u64>>;
    /// A log2 bound on |det| over all square submatrices of the integer
    /// form of the system. Only sizes prime budgets; correctness never
    /// depends on its tightness.
    fn log2_det_bound(&self) -> f64;
}

/// Systems whose rows are exactly representable integers.
pub trait IntegerSystem: LinearSystem {
    fn integer_row(&self, i: usize) -> Vec<BigInt>;
}

/// Reduced row echelon form over a prime field.
pub struct Echelon {
    prime: u64,
    cols: usize,
    pivot_cols: Vec<usize>,
    pivot_det: u64,
    rref: Vec<u64>,
}

/// Gauss-Jordan elimination; `data` is row-major and already reduced mod p.
pub fn row_reduce(fp: &FpRing, rows: usize, cols: usize, mut data: Vec<u64>) -> Echelon {
    assert_eq!(data.len(), rows * cols);
    let mut pivot_cols = Vec::new();
    let mut det = fp.one();
    let mut negated = false;
    let mut scratch = vec![0u64; cols];
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| data[i * cols + c] != 0) else {
            continue;
        };
        if pr != r {
            for j in c..cols {
                data.swap(pr * cols + j, r * cols + j);
            }
            negated = !negated;
        }
        let pval = data[r * cols + c];
        det = fp.mul(&det, &pval);
        let inv = fp.inv(pval);
        for j in c..cols {
            data[r * cols + j] = fp.mul(&data[r * cols + j], &inv);
        }
        scratch[c..cols].copy_from_slice(&data[r * cols + c..r * cols + cols]);
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = data[i * cols + c];
            if f == 0 {
                continue;
            }
            for j in c..cols {
                let t = fp.mul(&f, &scratch[j]);
                data[i * cols + j] = fp.sub(&data[i * cols + j], &t);
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    if negated {
        det = fp.neg(det);
    }
    Echelon { prime: fp.modulus(), cols, pivot_cols, pivot_det: det, rref: data }
}

impl Echelon {
    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    /// det of the square block formed by the pivot rows and columns, mod p.
    pub fn pivot_det(&self) -> u64 {
        self.pivot_det
    }

    pub fn first_free_col(&self) -> Option<usize> {
        (0..self.cols).find(|c| !self.pivot_cols.contains(c))
    }

    pub fn last_free_col(&self) -> Option<usize> {
        (0..self.cols).rev().find(|c| !self.pivot_cols.contains(c))
    }

    /// The kernel vector with x[free] = 1 and every other free coordinate 0.
    pub fn kernel_unit(&self, fp: &FpRing, free: usize) -> Vec<u64> {
        debug_assert!(!self.pivot_cols.contains(&free));
        let mut x = vec![0u64; self.cols];
        x[free] = 1;
        for (i, &pc) in self.pivot_cols.iter().enumerate() {
            x[pc] = fp.neg(self.rref[i * self.cols + free]);
        }
        x
    }
}

/// Eliminates the system modulo one prime.
pub fn modular_echelon(sys: &dyn LinearSystem, prime: u64) -> Result<Echelon, FitError> {
    if !is_prime(prime) {
        return Err(FitError::NotPrime { value: prime });
    }
    let fp = FpRing::new(prime);
    let data = sys.fill(&fp).ok_or(FitError::UnusablePrime { prime })?;
    Ok(row_reduce(&fp, sys.rows(), sys.cols(), data))
}

pub fn modular_rank(sys: &dyn LinearSystem, prime: u64) -> Result<usize, FitError> {
    modular_echelon(sys, prime).map(|e| e.rank())
}

/// x mod p for a rational x, or None if p divides the denominator.
pub(crate) fn rat_mod(x: &BigRational, fp: &FpRing) -> Option<u64> {
    let den = bigint_mod(x.denom(), fp);
    if den == 0 {
        return None;
    }
    let num = bigint_mod(x.numer(), fp);
    Some(fp.mul(&num, &fp.inv(den)))
}

/// Descending supply of primes, starting at (and including) `start`.
struct PrimeWalk {
    cursor: u64,
}

impl PrimeWalk {
    fn new(start: u64) -> Self {
        PrimeWalk { cursor: start }
    }

    fn next_prime(&mut self) -> Result<u64, FitError> {
        let mut c = self.cursor;
        while c >= 2 {
            if is_prime(c) {
                self.cursor = c - 1;
                return Ok(c);
            }
            c -= 1;
        }
        Err(FitError::Solver { message: "prime supply exhausted".into() })
    }
}

/// Per-coordinate CRT image of the kernel vector across the used primes.
struct CrtAccum {
    modulus: BigInt,
    values: Vec<BigInt>,
}

impl CrtAccum {
    fn new(prime: u64, values: &[u64]) -> Self {
        CrtAccum {
            modulus: BigInt::from(prime),
            values: values.iter().map(|&v| BigInt::from(v)).collect(),
        }
    }

    fn merge(&mut self, prime: u64, values: &[u64]) {
        let fp = FpRing::new(prime);
        let inv = fp.inv(bigint_mod(&self.modulus, &fp));
        for (acc, &v) in self.values.iter_mut().zip(values) {
            let r = bigint_mod(acc, &fp);
            let t = fp.mul(&fp.sub(&v, &r), &inv);
            *acc += &self.modulus * BigInt::from(t);
        }
        self.modulus *= BigInt::from(prime);
    }

    fn modulus_bits(&self) -> u64 {
        self.modulus.bits()
    }

    /// Residues shifted into (−m/2, m/2].
    fn symmetric_lift(&self) -> Vec<BigInt> {
        let half = &self.modulus >> 1;
        self.values
            .iter()
            .map(|v| if v > &half { v - &self.modulus } else { v.clone() })
            .collect()
    }
}

/// a/b from its image x mod m, with |a|, b bounded by sqrt((m−1)/2).
fn rational_reconstruct(x: &BigInt, m: &BigInt) -> Option<BigRational> {
    let bound = ((m - BigInt::one()) / BigInt::from(2)).sqrt();
    let mut r0 = m.clone();
    let mut r1 = x.mod_floor(m);
    let mut t0 = BigInt::zero();
    let mut t1 = BigInt::one();
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = r1;
        r1 = r2;
        let t2 = &t0 - &q * &t1;
        t0 = t1;
        t1 = t2;
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    let den = t1.abs();
    let num = if t1.is_negative() { -r1 } else { r1 };
    Some(BigRational::new(num, den))
}

/// Which free column the kernel vector is normalized at. `Last` favors
/// solutions with weight on the trailing unknowns, which matters when the
/// kernel has dimension above one and the caller wants the trailing block
/// (e.g. the leading polynomial of an ODE ansatz) to stay nonzero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FreeColumn {
    #[default]
    First,
    Last,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub presolve_prime: u64,
    pub free_column: FreeColumn,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { presolve_prime: DEFAULT_PRESOLVE_PRIME, free_column: FreeColumn::First }
    }
}

struct Structure {
    rank: usize,
    pivot_cols: Vec<usize>,
    free_col: usize,
}

fn prime_budget(log2_det_bound: f64, factor: f64) -> usize {
    ((factor * log2_det_bound + 8.0) / 60.0).ceil() as usize + 8
}

/// Checks A·x ≡ 0 against fresh primes from the walk; at most four attempts
/// (a prime can be unusable when it divides a candidate denominator).
fn witness_confirms(
    sys: &dyn LinearSystem,
    walk: &mut PrimeWalk,
    candidate: &[BigRational],
) -> Result<bool, FitError> {
    'next_prime: for _ in 0..4 {
        let p = walk.next_prime()?;
        let fp = FpRing::new(p);
        let Some(data) = sys.fill(&fp) else { continue };
        let mut xres = Vec::with_capacity(candidate.len());
        for c in candidate {
            match rat_mod(c, &fp) {
                Some(r) => xres.push(r),
                None => continue 'next_prime,
            }
        }
        let cols = sys.cols();
        let ok = (0..sys.rows()).all(|i| {
            let mut acc: u128 = 0;
            for (j, &x) in xres.iter().enumerate() {
                acc += (data[i * cols + j] as u128 * x as u128) % p as u128;
            }
            acc % p as u128 == 0
        });
        return Ok(ok);
    }
    Ok(false)
}

/// The exact rational kernel vector normalized to 1 at the first free
/// column (other free coordinates 0), or None when the kernel over the
/// rationals is trivial.
pub fn rational_kernel_vector(
    sys: &dyn LinearSystem,
    opts: &SolveOptions,
) -> Result<Option<Vec<BigRational>>, FitError> {
    if !is_prime(opts.presolve_prime) {
        return Err(FitError::NotPrime { value: opts.presolve_prime });
    }
    let budget = prime_budget(sys.log2_det_bound(), 2.0);
    let mut walk = PrimeWalk::new(opts.presolve_prime);
    let mut anchor: Option<Structure> = None;
    let mut accum: Option<CrtAccum> = None;
    let mut used = 0usize;
    let mut discards = 0usize;
    let mut reanchors = 0usize;
    loop {
        if used > budget || discards > 64 {
            return Err(FitError::Solver {
                message: format!("kernel reconstruction did not stabilize within {used} primes"),
            });
        }
        let p = walk.next_prime()?;
        let fp = FpRing::new(p);
        let Some(data) = sys.fill(&fp) else {
            discards += 1;
            continue;
        };
        let ech = row_reduce(&fp, sys.rows(), sys.cols(), data);
        if ech.nullity() == 0 {
            // rank mod p never exceeds the rank over Q, so the kernel is trivial.
            return Ok(None);
        }
        let matches = anchor.as_ref().is_some_and(|a| {
            ech.rank() == a.rank && ech.pivot_cols() == a.pivot_cols.as_slice()
        });
        let needs_anchor = match &anchor {
            None => true,
            Some(a) if ech.rank() > a.rank => {
                // The old anchor prime underestimated the rank; start over.
                reanchors += 1;
                if reanchors > 4 {
                    return Err(FitError::Solver {
                        message: "pivot structure kept shifting across primes".into(),
                    });
                }
                true
            }
            Some(_) if !matches => {
                discards += 1;
                if discards % 16 == 0 {
                    // Too many structure mismatches: the anchor itself was
                    // likely the unlucky prime. Re-anchor on the current one.
                    reanchors += 1;
                    if reanchors > 4 {
                        return Err(FitError::Solver {
                            message: "pivot structure kept shifting across primes".into(),
                        });
                    }
                    true
                } else {
                    continue;
                }
            }
            Some(_) => false,
        };
        if needs_anchor {
            let free_col = match opts.free_column {
                FreeColumn::First => ech.first_free_col(),
                FreeColumn::Last => ech.last_free_col(),
            }
            .expect("positive nullity has a free column");
            let unit = ech.kernel_unit(&fp, free_col);
            accum = Some(CrtAccum::new(p, &unit));
            anchor = Some(Structure {
                rank: ech.rank(),
                pivot_cols: ech.pivot_cols().to_vec(),
                free_col,
            });
            used = 1;
        } else {
            let free_col = anchor.as_ref().unwrap().free_col;
            let unit = ech.kernel_unit(&fp, free_col);
            accum.as_mut().unwrap().merge(p, &unit);
            used += 1;
        }
        let acc = accum.as_ref().unwrap();
        let candidate: Option<Vec<BigRational>> =
            acc.values.iter().map(|v| rational_reconstruct(v, &acc.modulus)).collect();
        if let Some(cand) = candidate {
            if witness_confirms(sys, &mut walk, &cand)? {
                return Ok(Some(cand));
            }
        }
    }
}

/// The exact integer kernel vector of an exactly determined system
/// (rows = cols − 1): coordinates are the signed maximal minors, with the
/// free coordinate equal to det of the pivot block. Returns None when the
/// rank is deficient, i.e. the kernel has dimension above one.
pub fn integer_kernel_vector(
    sys: &dyn IntegerSystem,
    opts: &SolveOptions,
) -> Result<Option<Vec<BigInt>>, FitError> {
    if !is_prime(opts.presolve_prime) {
        return Err(FitError::NotPrime { value: opts.presolve_prime });
    }
    let rows = sys.rows();
    let cols = sys.cols();
    assert_eq!(rows + 1, cols, "integer kernel extraction expects rows = cols - 1");
    let target_bits = sys.log2_det_bound() + 2.0;
    let budget = prime_budget(sys.log2_det_bound(), 1.0);
    let mut walk = PrimeWalk::new(opts.presolve_prime);
    let mut anchor: Option<Structure> = None;
    let mut accum: Option<CrtAccum> = None;
    let mut deficient = 0usize;
    let mut discards = 0usize;
    let mut used = 0usize;
    while accum.as_ref().map_or(true, |a| (a.modulus_bits() as f64) <= target_bits) {
        if used > budget || discards > 64 {
            return Err(FitError::Solver {
                message: "integer kernel extraction exceeded its prime budget".into(),
            });
        }
        let p = walk.next_prime()?;
        let fp = FpRing::new(p);
        let Some(data) = sys.fill(&fp) else {
            discards += 1;
            continue;
        };
        let ech = row_reduce(&fp, rows, cols, data);
        match &anchor {
            None => {
                if ech.rank() < rows {
                    deficient += 1;
                    if deficient >= 4 {
                        // Rank is deficient modulo several independent primes,
                        // so it is deficient over Q.
                        return Ok(None);
                    }
                    continue;
                }
                let free_col = ech.first_free_col().expect("nullity is one");
                let scaled = scaled_kernel(&fp, &ech, free_col);
                accum = Some(CrtAccum::new(p, &scaled));
                anchor = Some(Structure {
                    rank: ech.rank(),
                    pivot_cols: ech.pivot_cols().to_vec(),
                    free_col,
                });
                used = 1;
            }
            Some(a) => {
                if ech.rank() != a.rank || ech.pivot_cols() != a.pivot_cols.as_slice() {
                    discards += 1;
                    continue;
                }
                let scaled = scaled_kernel(&fp, &ech, a.free_col);
                accum.as_mut().unwrap().merge(p, &scaled);
                used += 1;
            }
        }
    }
    let x = accum.expect("loop ran at least once").symmetric_lift();
    for i in 0..rows {
        let row = sys.integer_row(i);
        let dot: BigInt = row.iter().zip(&x).map(|(a, b)| a * b).sum();
        if !dot.is_zero() {
            return Err(FitError::Solver {
                message: format!("integer kernel vector failed exact verification at row {i}"),
            });
        }
    }
    Ok(Some(x))
}

fn scaled_kernel(fp: &FpRing, ech: &Echelon, free_col: usize) -> Vec<u64> {
    let det = ech.pivot_det();
    ech.kernel_unit(fp, free_col).iter().map(|v| fp.mul(v, &det)).collect()
}
