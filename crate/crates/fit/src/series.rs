//! Exact truncated power series and the transforms applied before fitting.
//!
//! A [`SeriesTerms`] holds a finite prefix a_0..a_n of a formal power series
//! as exact rationals. Counting sequences from the counting backends start
//! at n = 1, so the constructors record how a_0 was chosen; reports can then
//! state the convention instead of leaving it implicit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::FitError;

/// Where the constant term of a [`SeriesTerms`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum A0Note {
    /// a_0 was part of the input data.
    Supplied,
    /// a_0 = 0 was prepended in front of a sequence that starts at n = 1.
    ZeroPrepended,
    /// a_0 = 1 was prepended to make the series invertible.
    OnePrepended,
}

impl A0Note {
    pub fn describe(self) -> &'static str {
        match self {
            A0Note::Supplied => "a_0 supplied with the input",
            A0Note::ZeroPrepended => "a_0 = 0 prepended",
            A0Note::OnePrepended => "a_0 = 1 prepended",
        }
    }
}

/// The coefficients a_0..a_n of a series prefix, with the a_0 convention.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerms {
    coeffs: Vec<BigRational>,
    a0: A0Note,
}

impl SeriesTerms {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        SeriesTerms { coeffs, a0: A0Note::Supplied }
    }

    pub fn from_integers(values: &[BigInt]) -> Self {
        Self::new(values.iter().map(|v| BigRational::from_integer(v.clone())).collect())
    }

    pub fn from_i64(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
    }

    /// A counting sequence f(1), f(2), … with a_0 = 0 prepended.
    pub fn counting_sequence(values: &[BigInt]) -> Self {
        let mut coeffs = Vec::with_capacity(values.len() + 1);
        coeffs.push(BigRational::zero());
        coeffs.extend(values.iter().map(|v| BigRational::from_integer(v.clone())));
        SeriesTerms { coeffs, a0: A0Note::ZeroPrepended }
    }

    /// A counting sequence with a_0 = 1, for transforms that need an
    /// invertible constant term.
    pub fn counting_sequence_with_unit(values: &[BigInt]) -> Self {
        let mut coeffs = Vec::with_capacity(values.len() + 1);
        coeffs.push(BigRational::one());
        coeffs.extend(values.iter().map(|v| BigRational::from_integer(v.clone())));
        SeriesTerms { coeffs, a0: A0Note::OnePrepended }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn a0_note(&self) -> A0Note {
        self.a0
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The largest exponent carried, i.e. n for a prefix a_0..a_n.
    pub fn top_index(&self) -> usize {
        assert!(!self.coeffs.is_empty(), "empty series has no top index");
        self.coeffs.len() - 1
    }

    pub fn is_all_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Every coefficient multiplied by c.
    pub fn scaled(&self, c: &BigRational) -> SeriesTerms {
        SeriesTerms {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            a0: self.a0,
        }
    }
}

/// The series transforms applied before re-fitting a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// a_n ↦ a_n / n! (ordinary to exponential generating function).
    Egf,
    /// F ↦ 1/F; requires a_0 ≠ 0.
    Reciprocal,
    /// F ↦ the compositional inverse of F; requires a_0 = 0 and a_1 ≠ 0.
    Revert,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::Egf => "egf",
            Transform::Reciprocal => "reciprocal",
            Transform::Revert => "revert",
        }
    }
}

/// Applies one transform, preserving the truncation order.
pub fn transform_series(terms: &SeriesTerms, transform: Transform) -> Result<SeriesTerms, FitError> {
    let a = terms.coeffs();
    match transform {
        Transform::Egf => {
            let mut factorial = BigInt::one();
            let coeffs = a
                .iter()
                .enumerate()
                .map(|(n, c)| {
                    if n > 0 {
                        factorial *= n;
                    }
                    c / BigRational::from_integer(factorial.clone())
                })
                .collect();
            Ok(SeriesTerms { coeffs, a0: terms.a0 })
        }
        Transform::Reciprocal => {
            if a.first().map_or(true, Zero::is_zero) {
                return Err(FitError::Transform {
                    transform: "reciprocal",
                    reason: "requires a nonzero constant term a_0",
                });
            }
            Ok(SeriesTerms { coeffs: reciprocal_trunc(a, a.len()), a0: A0Note::Supplied })
        }
        Transform::Revert => {
            let ok = a.len() >= 2 && a[0].is_zero() && !a[1].is_zero();
            if !ok {
                return Err(FitError::Transform {
                    transform: "revert",
                    reason: "requires at least two terms with a_0 = 0 and a_1 != 0",
                });
            }
            // Lagrange inversion: the inverse g has
            //   [x^n] g = (1/n) · [x^{n-1}] (x / f(x))^n.
            let len = a.len();
            let h = reciprocal_trunc(&a[1..], len - 1);
            let mut out = vec![BigRational::zero(); len];
            let mut hpow = vec![BigRational::one()];
            for n in 1..len {
                hpow = mul_trunc(&hpow, &h, len - 1);
                out[n] = &hpow[n - 1] / BigRational::from_integer(BigInt::from(n));
            }
            Ok(SeriesTerms { coeffs: out, a0: A0Note::Supplied })
        }
    }
}

/// Applies a chain of transforms left to right.
pub fn transform_chain(terms: &SeriesTerms, chain: &[Transform]) -> Result<SeriesTerms, FitError> {
    let mut cur = terms.clone();
    for &t in chain {
        cur = transform_series(&cur, t)?;
    }
    Ok(cur)
}

/// c[t] = Σ_i a[i]·b[t−i] for t < len, treating missing coefficients as 0.
pub(crate) fn mul_trunc(a: &[BigRational], b: &[BigRational], len: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); len];
    for (i, ai) in a.iter().enumerate().take(len) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(len - i) {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// The series 1/a truncated to len terms; a[0] must be nonzero.
pub(crate) fn reciprocal_trunc(a: &[BigRational], len: usize) -> Vec<BigRational> {
    assert!(!a.is_empty() && !a[0].is_zero(), "reciprocal needs an invertible constant term");
    let inv0 = a[0].recip();
    let mut out = Vec::with_capacity(len);
    out.push(inv0.clone());
    for t in 1..len {
        let mut acc = BigRational::zero();
        for i in 1..=t.min(a.len() - 1) {
            acc += &a[i] * &out[t - i];
        }
        out.push(-acc * &inv0);
    }
    out
}

/// The termwise derivative: b[t] = (t+1)·a[t+1], one term shorter.
pub(crate) fn derivative_trunc(a: &[BigRational]) -> Vec<BigRational> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(t, c)| c * BigRational::from_integer(BigInt::from(t)))
        .collect()
}
