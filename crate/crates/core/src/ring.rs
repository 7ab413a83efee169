//! Coefficient rings for the counting recurrences.
//!
//! The recurrences only need ring operations plus equality, so they are
//! written against the [`Ring`] trait and instantiated with exact big
//! integers ([`BigIntRing`]) or a word-sized prime field ([`FpRing`]).
//!
//! The dominant cost is sums of the form Σ_ℓ w_ℓ · (hi_ℓ − lo_ℓ). Rings
//! expose an accumulator type for that pattern so the prime field can defer
//! reduction: with a modulus below 2^31 every product fits in 64 bits and a
//! 128-bit accumulator absorbs billions of terms before one final reduction.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// A commutative ring with an explicit element carrier.
///
/// The ring is passed as a value (not a type alone) because moduli are
/// runtime data. Elements are plain data; all arithmetic goes through the
/// ring.
pub trait Ring: Send + Sync {
    type Elem: Clone + Send + Sync + std::fmt::Debug + 'static;
    /// Accumulator for [`Ring::acc_weighted_diff`] chains.
    type Acc;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_u64(&self, x: u64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn eq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;

    fn is_zero(&self, a: &Self::Elem) -> bool {
        self.eq(a, &self.zero())
    }

    fn acc_zero(&self) -> Self::Acc;
    /// acc += w · (hi − lo)
    fn acc_weighted_diff(&self, acc: &mut Self::Acc, w: &Self::Elem, hi: &Self::Elem, lo: &Self::Elem);
    fn acc_finish(&self, acc: Self::Acc) -> Self::Elem;
}

/// Exact arbitrary-precision integers.
#[derive(Clone, Copy, Debug, Default)]
pub struct BigIntRing;

impl Ring for BigIntRing {
    type Elem = BigInt;
    type Acc = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }

    fn one(&self) -> BigInt {
        BigInt::one()
    }

    fn from_u64(&self, x: u64) -> BigInt {
        BigInt::from(x)
    }

    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }

    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }

    fn eq(&self, a: &BigInt, b: &BigInt) -> bool {
        a == b
    }

    fn acc_zero(&self) -> BigInt {
        BigInt::zero()
    }

    fn acc_weighted_diff(&self, acc: &mut BigInt, w: &BigInt, hi: &BigInt, lo: &BigInt) {
        *acc += w * (hi - lo);
    }

    fn acc_finish(&self, acc: BigInt) -> BigInt {
        acc
    }
}

/// The field Z/p for an odd prime p < 2^63, elements as reduced residues.
#[derive(Clone, Copy, Debug)]
pub struct FpRing {
    p: u64,
    /// With p < 2^31 a product of residues fits in u64 and a u128 can
    /// accumulate ~2^66 of them; larger moduli reduce per term instead.
    small: bool,
}

impl FpRing {
    /// Panics if p < 2 or p >= 2^63 (sums of two residues must fit in u64).
    pub fn new(p: u64) -> Self {
        assert!(p >= 2, "modulus must be at least 2");
        assert!(p < 1 << 63, "modulus must fit below 2^63");
        FpRing { p, small: p < 1 << 31 }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn reduce_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat; requires p prime and a ≢ 0.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a % self.p != 0, "zero has no inverse");
        self.pow(a, self.p - 2)
    }
}

impl Ring for FpRing {
    type Elem = u64;
    type Acc = u128;

    fn zero(&self) -> u64 {
        0
    }

    fn one(&self) -> u64 {
        1 % self.p
    }

    fn from_u64(&self, x: u64) -> u64 {
        x % self.p
    }

    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn mul(&self, a: &u64, b: &u64) -> u64 {
        if self.small {
            (a * b) % self.p
        } else {
            ((*a as u128 * *b as u128) % self.p as u128) as u64
        }
    }

    fn eq(&self, a: &u64, b: &u64) -> bool {
        a == b
    }

    fn acc_zero(&self) -> u128 {
        0
    }

    #[inline]
    fn acc_weighted_diff(&self, acc: &mut u128, w: &u64, hi: &u64, lo: &u64) {
        let diff = if hi >= lo { hi - lo } else { hi + self.p - lo };
        if self.small {
            *acc += (*w * diff) as u128;
        } else {
            *acc += (*w as u128 * diff as u128) % self.p as u128;
        }
    }

    fn acc_finish(&self, acc: u128) -> u64 {
        (acc % self.p as u128) as u64
    }
}

/// Pascal-triangle binomial coefficients C(0..=n_max, ·) over a ring.
pub struct BinomialTable<R: Ring> {
    rows: Vec<Vec<R::Elem>>,
}

impl<R: Ring> BinomialTable<R> {
    pub fn new(ring: &R, n_max: usize) -> Self {
        let mut rows: Vec<Vec<R::Elem>> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut row = Vec::with_capacity(n + 1);
            row.push(ring.one());
            for k in 1..n {
                row.push(ring.add(&rows[n - 1][k - 1], &rows[n - 1][k]));
            }
            if n > 0 {
                row.push(ring.one());
            }
            rows.push(row);
        }
        BinomialTable { rows }
    }

    /// C(n, k); zero outside 0 <= k <= n.
    pub fn get(&self, ring: &R, n: usize, k: usize) -> R::Elem {
        if k <= n {
            self.rows[n][k].clone()
        } else {
            ring.zero()
        }
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// The column k as a dense vector indexed by n (zero where k > n),
    /// laid out for sequential reads over varying n.
    pub fn column(&self, ring: &R, k: usize) -> Vec<R::Elem> {
        (0..self.rows.len())
            .map(|n| self.get(ring, n, k))
            .collect()
    }
}

/// Reduces a big integer into the field; negative inputs wrap.
pub fn bigint_mod(x: &BigInt, fp: &FpRing) -> u64 {
    let p = BigInt::from(fp.modulus());
    let mut r = x % &p;
    if r.is_negative() {
        r += &p;
    }
    let digits = r.to_u64_digits().1;
    digits.first().copied().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_axioms<R: Ring>(ring: &R, sample: &[R::Elem]) {
        let zero = ring.zero();
        let one = ring.one();
        for a in sample {
            assert!(ring.eq(&ring.add(a, &zero), a));
            assert!(ring.eq(&ring.mul(a, &one), a));
            assert!(ring.eq(&ring.sub(a, a), &zero));
            for b in sample {
                assert!(ring.eq(&ring.add(a, b), &ring.add(b, a)));
                assert!(ring.eq(&ring.mul(a, b), &ring.mul(b, a)));
                for c in sample {
                    let left = ring.mul(a, &ring.add(b, c));
                    let right = ring.add(&ring.mul(a, b), &ring.mul(a, c));
                    assert!(ring.eq(&left, &right));
                    let assoc_l = ring.mul(&ring.mul(a, b), c);
                    let assoc_r = ring.mul(a, &ring.mul(b, c));
                    assert!(ring.eq(&assoc_l, &assoc_r));
                }
            }
        }
    }

    #[test]
    fn bigint_ring_axioms() {
        let ring = BigIntRing;
        let sample: Vec<BigInt> = [-7i64, -1, 0, 1, 2, 12345678901234567]
            .iter()
            .map(|&x| BigInt::from(x))
            .collect();
        ring_axioms(&ring, &sample);
    }

    #[test]
    fn fp_ring_axioms_small_and_large_modulus() {
        for p in [2u64, 3, 97, (1 << 31) - 1, (1 << 61) - 1] {
            let ring = FpRing::new(p);
            let sample: Vec<u64> = [0, 1, 2, p / 2, p - 1].iter().map(|&x| x % p).collect();
            ring_axioms(&ring, &sample);
        }
    }

    #[test]
    fn fp_inverse_and_pow() {
        let ring = FpRing::new(1_000_000_007);
        for a in [1u64, 2, 999, 123456789] {
            assert_eq!(ring.mul(&a, &ring.inv(a)), 1);
        }
        assert_eq!(ring.pow(3, 0), 1);
        assert_eq!(ring.pow(2, 40), (1u64 << 40) % 1_000_000_007);
    }

    #[test]
    fn weighted_diff_accumulation_matches_naive() {
        for p in [97u64, (1 << 31) - 1, (1 << 61) - 1] {
            let ring = FpRing::new(p);
            let terms: Vec<(u64, u64, u64)> = (0u64..200)
                .map(|i| {
                    let w = i.wrapping_mul(0x9e3779b97f4a7c15) % p;
                    let hi = i.wrapping_mul(0xbf58476d1ce4e5b9) % p;
                    let lo = i.wrapping_mul(0x94d049bb133111eb) % p;
                    (w, hi, lo)
                })
                .collect();
            let mut acc = ring.acc_zero();
            let mut naive = 0u64;
            for (w, hi, lo) in &terms {
                ring.acc_weighted_diff(&mut acc, w, hi, lo);
                naive = ring.add(&naive, &ring.mul(w, &ring.sub(hi, lo)));
            }
            assert_eq!(ring.acc_finish(acc), naive);
        }
    }

    #[test]
    fn binomial_table_values() {
        let ring = BigIntRing;
        let t = BinomialTable::new(&ring, 12);
        assert_eq!(t.get(&ring, 4, 2), BigInt::from(6));
        assert_eq!(t.get(&ring, 10, 5), BigInt::from(252));
        assert_eq!(t.get(&ring, 0, 0), BigInt::from(1));
        assert_eq!(t.get(&ring, 3, 5), BigInt::from(0));
        let fp = FpRing::new(97);
        let tf = BinomialTable::new(&fp, 12);
        assert_eq!(tf.get(&fp, 10, 5), 252 % 97);
        assert_eq!(tf.column(&fp, 2)[4], 6);
    }

    #[test]
    fn bigint_mod_wraps_negatives() {
        let fp = FpRing::new(97);
        assert_eq!(bigint_mod(&BigInt::from(-1), &fp), 96);
        assert_eq!(bigint_mod(&BigInt::from(97 * 5 + 3), &fp), 3);
        assert_eq!(bigint_mod(&BigInt::from(0), &fp), 0);
    }
}
