//! Dense univariate polynomials with exact rational coefficients.
//!
//! Coefficients are stored ascending by exponent with no trailing zeros, so
//! the zero polynomial is the empty vector and `degree` is `None` for it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn x() -> Self {
        Poly::from_coeffs(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// Coefficients ascending by exponent; trailing zeros are trimmed.
    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().map_or(false, Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::from_coeffs(
            coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect(),
        )
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// The coefficient of x^i, zero beyond the stored degree.
    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// self · x^s.
    pub fn mul_xpow(&self, s: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); s];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    pub fn pow(&self, e: usize) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Quotient and remainder with deg(rem) < deg(div); div must be nonzero.
    pub fn divrem(&self, div: &Poly) -> (Poly, Poly) {
        assert!(!div.is_zero(), "division by the zero polynomial");
        let dd = div.coeffs.len() - 1;
        let lead_inv = div.coeffs[dd].recip();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let q = &rem[i] * &lead_inv;
            for (j, c) in div.coeffs.iter().enumerate() {
                let t = &q * c;
                rem[i - dd + j] -= t;
            }
            quot[i - dd] = q;
        }
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    /// Leading coefficient scaled to 1; the zero polynomial stays zero.
    pub fn monic(&self) -> Poly {
        match self.coeffs.last() {
            None => Poly::zero(),
            Some(lead) => self.scale(&lead.recip()),
        }
    }

    /// Monic greatest common divisor; gcd(0, 0) = 0.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let mut a = a.monic();
        let mut b = b.monic();
        while !b.is_zero() {
            let r = a.divrem(&b).1.monic();
            a = b;
            b = r;
        }
        a
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = vec![BigRational::zero(); self.coeffs.len().max(rhs.coeffs.len())];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::from_coeffs(out)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = vec![BigRational::zero(); self.coeffs.len().max(rhs.coeffs.len())];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        Poly::from_coeffs(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Poly::from_coeffs(out)
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Space-separated ascending coefficients, "0" for the zero polynomial;
/// the line format fit reports are built from.
pub(crate) fn coeff_list(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let parts: Vec<String> = p.coeffs().iter().map(fmt_rational).collect();
    parts.join(" ")
}

/// Ascending-power human form, e.g. `21 - 74x + 5x^2 + 180x^3 - 144x^4`.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag_is_one = mag.is_one();
            match i {
                0 => write!(f, "{}", fmt_rational(&mag))?,
                _ => {
                    if !mag_is_one {
                        write!(f, "{}", fmt_rational(&mag))?;
                    }
                    if i == 1 {
                        write!(f, "x")?;
                    } else {
                        write!(f, "x^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_trims_trailing_zeros() {
        let p = Poly::from_i64(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Poly::from_i64(&[0, 0]).degree(), None);
        assert!(Poly::from_i64(&[]).is_zero());
    }

    #[test]
    fn arithmetic_basics() {
        let a = Poly::from_i64(&[1, 2, 1]); // (1+x)^2
        let b = Poly::from_i64(&[1, 1]);
        assert_eq!(&b * &b, a);
        assert_eq!(&a - &a, Poly::zero());
        assert_eq!(&a + &(-&a), Poly::zero());
        assert_eq!(b.pow(2), a);
        assert_eq!(a.mul_xpow(2), Poly::from_i64(&[0, 0, 1, 2, 1]));
    }

    #[test]
    fn divrem_reconstructs_input() {
        let a = Poly::from_i64(&[3, -5, 0, 7, 2]);
        let b = Poly::from_i64(&[-1, 0, 2]);
        let (q, r) = a.divrem(&b);
        assert!(r.degree() < b.degree());
        assert_eq!(&(&q * &b) + &r, a);
        let (q2, r2) = b.divrem(&a);
        assert!(q2.is_zero());
        assert_eq!(r2, b);
    }

    #[test]
    fn gcd_finds_common_factor() {
        let common = Poly::from_i64(&[1, -2]); // 1 - 2x
        let a = &common * &Poly::from_i64(&[1, 1]);
        let b = &common * &Poly::from_i64(&[3, 0, 1]);
        let g = Poly::gcd(&a, &b);
        assert_eq!(g, common.monic());
        assert_eq!(Poly::gcd(&Poly::zero(), &b), b.monic());
        assert!(Poly::gcd(&Poly::zero(), &Poly::zero()).is_zero());
    }

    #[test]
    fn eval_and_derivative() {
        let p = Poly::from_i64(&[1, -3, 0, 2]); // 1 - 3x + 2x^3
        let two = BigRational::from_integer(BigInt::from(2));
        assert_eq!(p.eval(&two), BigRational::from_integer(BigInt::from(11)));
        assert_eq!(p.derivative(), Poly::from_i64(&[-3, 0, 6]));
    }

    #[test]
    fn display_form() {
        assert_eq!(Poly::from_i64(&[21, -74, 5, 180, -144]).to_string(), "21 - 74x + 5x^2 + 180x^3 - 144x^4");
        assert_eq!(Poly::from_i64(&[0, 1]).to_string(), "x");
        assert_eq!(Poly::from_i64(&[0, -1, 0, 1]).to_string(), "-x + x^3");
        assert_eq!(Poly::zero().to_string(), "0");
        let half = Poly::from_coeffs(vec![BigRational::new(BigInt::from(1), BigInt::from(2))]);
        assert_eq!(half.to_string(), "1/2");
    }
}
