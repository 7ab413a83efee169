//! Binary fixed point on arbitrary-size mantissas.
//!
//! `Fixed` holds value = mant / 2^bits. The precision is chosen per call
//! chain and every binary operation requires both operands to carry the same
//! `bits`; mixing precisions is a caller bug and panics. Multiplication and
//! division round to nearest, half away from zero, so each operation is off
//! by at most half an ulp.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Decimal digits representable at a mantissa precision, minus a guard.
pub fn digits_cap(bits: u32) -> usize {
    let cap = (bits as f64 * std::f64::consts::LOG10_2) as isize - 2;
    cap.max(0) as usize
}

/// Rounds x / 2^k to nearest, half away from zero.
fn shr_round(x: &BigInt, k: u32) -> BigInt {
    if k == 0 {
        return x.clone();
    }
    let half = BigInt::from(1) << (k - 1);
    let mag = (x.abs() + half) >> k;
    if x.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Rounds n / d to nearest, half away from zero. d must be nonzero.
fn div_round(n: &BigInt, d: &BigInt) -> BigInt {
    assert!(!d.is_zero(), "fixed-point division by zero");
    let dn = d.abs();
    let q = (n.abs() * BigInt::from(2) + &dn) / (dn * BigInt::from(2));
    if n.is_negative() != d.is_negative() {
        -q
    } else {
        q
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Fixed {
    mant: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn zero(bits: u32) -> Fixed {
        Fixed { mant: BigInt::zero(), bits }
    }

    pub fn one(bits: u32) -> Fixed {
        Fixed { mant: BigInt::from(1) << bits, bits }
    }

    pub fn from_i64(v: i64, bits: u32) -> Fixed {
        Fixed { mant: BigInt::from(v) << bits, bits }
    }

    pub fn from_bigint(v: &BigInt, bits: u32) -> Fixed {
        Fixed { mant: v.clone() << bits, bits }
    }

    pub fn from_rational(v: &BigRational, bits: u32) -> Fixed {
        Fixed { mant: div_round(&(v.numer() << bits), v.denom()), bits }
    }

    /// value = v * 2^pow2, rounded once.
    pub fn from_rational_pow2(v: &BigRational, pow2: i64, bits: u32) -> Fixed {
        let shift = bits as i64 + pow2;
        let mant = if shift >= 0 {
            div_round(&(v.numer() << shift as u64), v.denom())
        } else {
            div_round(v.numer(), &(v.denom() << (-shift) as u64))
        };
        Fixed { mant, bits }
    }

    /// None for NaN or infinities.
    pub fn from_f64(v: f64, bits: u32) -> Option<Fixed> {
        let r = BigRational::from_float(v)?;
        Some(Fixed::from_rational(&r, bits))
    }

    /// Exact ratio of integers, rounded once into the representation.
    pub fn from_ratio(num: &BigInt, den: &BigInt, bits: u32) -> Fixed {
        Fixed { mant: div_round(&(num << bits), den), bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn abs(&self) -> Fixed {
        Fixed { mant: self.mant.abs(), bits: self.bits }
    }

    /// Exact scaling by a machine integer.
    pub fn mul_i64(&self, v: i64) -> Fixed {
        Fixed { mant: &self.mant * v, bits: self.bits }
    }

    /// Re-rounds into a different precision.
    pub fn with_bits(&self, bits: u32) -> Fixed {
        if bits == self.bits {
            self.clone()
        } else if bits > self.bits {
            Fixed { mant: &self.mant << (bits - self.bits), bits }
        } else {
            Fixed { mant: shr_round(&self.mant, self.bits - bits), bits }
        }
    }

    /// floor(log2 |x|), None for zero. Exact to within one.
    pub fn log2_abs(&self) -> Option<i64> {
        if self.mant.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - 1 - self.bits as i64)
        }
    }

    /// Floor square root of a nonnegative value.
    pub fn sqrt(&self) -> Option<Fixed> {
        if self.mant.is_negative() {
            return None;
        }
        Some(Fixed { mant: (&self.mant << self.bits).sqrt(), bits: self.bits })
    }

    pub fn powi(&self, mut e: u32) -> Fixed {
        let mut base = self.clone();
        let mut acc = Fixed::one(self.bits);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        let mb = self.mant.bits();
        if mb > 900 {
            let s = (mb - 900) as u32;
            let head = (&self.mant >> s).to_f64().unwrap_or(f64::NAN);
            head * 2f64.powi(s as i32 - self.bits as i32)
        } else {
            self.mant.to_f64().unwrap_or(0.0) * 2f64.powi(-(self.bits as i32))
        }
    }

    /// Decimal expansion truncated-rounded to `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let neg = self.mant.is_negative();
        let mag = self.mant.abs();
        let int = &mag >> self.bits;
        let frac = &mag - (&int << self.bits);
        let scaled = shr_round(&(frac * BigInt::from(10).pow(digits as u32)), self.bits);
        let limit = BigInt::from(10).pow(digits as u32);
        let (int, scaled) = if scaled >= limit {
            (int + 1, BigInt::zero())
        } else {
            (int, scaled)
        };
        let sign = if neg && !(int.is_zero() && scaled.is_zero()) { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{:0>width$}", scaled.to_string(), width = digits)
        }
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({} @ {} bits)", self.to_decimal(digits_cap(self.bits).min(40)), self.bits)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(digits_cap(self.bits).min(40)))
    }
}

fn assert_same_bits(a: &Fixed, b: &Fixed) {
    assert_eq!(a.bits, b.bits, "fixed-point operands carry different precisions");
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        assert_same_bits(self, rhs);
        Fixed { mant: &self.mant + &rhs.mant, bits: self.bits }
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        assert_same_bits(self, rhs);
        Fixed { mant: &self.mant - &rhs.mant, bits: self.bits }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        assert_same_bits(self, rhs);
        Fixed { mant: shr_round(&(&self.mant * &rhs.mant), self.bits), bits: self.bits }
    }
}

impl Div for &Fixed {
    type Output = Fixed;
    fn div(self, rhs: &Fixed) -> Fixed {
        assert_same_bits(self, rhs);
        Fixed { mant: div_round(&(&self.mant << self.bits), &rhs.mant), bits: self.bits }
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed { mant: -&self.mant, bits: self.bits }
    }
}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Fixed) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fixed {
    fn cmp(&self, other: &Fixed) -> Ordering {
        assert_same_bits(self, other);
        self.mant.cmp(&other.mant)
    }
}

/// Complex value over two equal-precision `Fixed` components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CFixed {
    pub re: Fixed,
    pub im: Fixed,
}

impl CFixed {
    pub fn new(re: Fixed, im: Fixed) -> CFixed {
        assert_same_bits(&re, &im);
        CFixed { re, im }
    }

    pub fn zero(bits: u32) -> CFixed {
        CFixed { re: Fixed::zero(bits), im: Fixed::zero(bits) }
    }

    pub fn real(re: Fixed) -> CFixed {
        let bits = re.bits();
        CFixed { re, im: Fixed::zero(bits) }
    }

    pub fn from_f64s(re: f64, im: f64, bits: u32) -> Option<CFixed> {
        Some(CFixed { re: Fixed::from_f64(re, bits)?, im: Fixed::from_f64(im, bits)? })
    }

    pub fn bits(&self) -> u32 {
        self.re.bits()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> CFixed {
        CFixed { re: self.re.clone(), im: -&self.im }
    }

    pub fn add(&self, rhs: &CFixed) -> CFixed {
        CFixed { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }

    pub fn sub(&self, rhs: &CFixed) -> CFixed {
        CFixed { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }

    pub fn mul(&self, rhs: &CFixed) -> CFixed {
        CFixed {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }

    pub fn mul_real(&self, rhs: &Fixed) -> CFixed {
        CFixed { re: &self.re * rhs, im: &self.im * rhs }
    }

    /// Panics on a zero divisor, like integer division.
    pub fn div(&self, rhs: &CFixed) -> CFixed {
        let den = rhs.modulus_sq();
        let num = self.mul(&rhs.conj());
        CFixed { re: &num.re / &den, im: &num.im / &den }
    }

    pub fn neg(&self) -> CFixed {
        CFixed { re: -&self.re, im: -&self.im }
    }

    pub fn modulus_sq(&self) -> Fixed {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn modulus(&self) -> Fixed {
        self.modulus_sq().sqrt().expect("square modulus is nonnegative")
    }

    pub fn with_bits(&self, bits: u32) -> CFixed {
        CFixed { re: self.re.with_bits(bits), im: self.im.with_bits(bits) }
    }
}

impl fmt::Display for CFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.im.is_negative() {
            write!(f, "{} - {}i", self.re, self.im.abs())
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

/// Number of leading decimal digits on which a and b agree, judged from the
/// relative difference via mantissa bit lengths. Capped by the precision of
/// the representation. Exact agreement returns the cap.
pub fn agreed_digits(a: &Fixed, b: &Fixed) -> usize {
    assert_same_bits(a, b);
    let cap = digits_cap(a.bits());
    let diff = a - b;
    let Some(dl) = diff.log2_abs() else { return cap };
    let scale = a.abs().max(b.abs());
    let Some(sl) = scale.log2_abs() else { return 0 };
    let rel = sl - dl;
    if rel <= 0 {
        return 0;
    }
    let digits = (rel as f64 * std::f64::consts::LOG10_2) as isize - 1;
    (digits.max(0) as usize).min(cap)
}

/// Complex counterpart, judged from |a - b| relative to max(|a|, |b|).
/// Works on the components directly: squaring the difference would
/// underflow the representation long before the digit cap is reached.
pub fn agreed_digits_complex(a: &CFixed, b: &CFixed) -> usize {
    assert_eq!(a.bits(), b.bits(), "fixed-point operands carry different precisions");
    let cap = digits_cap(a.bits());
    let diff = a.sub(b);
    let d = diff.re.abs().max(diff.im.abs());
    let Some(dl) = d.log2_abs() else { return cap };
    let s = a.re.abs().max(a.im.abs()).max(b.re.abs()).max(b.im.abs());
    let Some(sl) = s.log2_abs() else { return 0 };
    let rel = sl - dl;
    if rel <= 0 {
        return 0;
    }
    let digits = (rel as f64 * std::f64::consts::LOG10_2) as isize - 1;
    (digits.max(0) as usize).min(cap)
}
