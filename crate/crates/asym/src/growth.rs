//! Growth constant of a counting sequence with a known exponential rate.
//!
//! For a sequence growing like a_n ~ C n! mu^-n the normalized values
//! C_n = a_n mu^n / n! approach C geometrically, the ratio being set by the
//! gap to the next singularity. The tail is modeled as C_n ~ C + alpha r^n
//! with r read off consecutive differences, which removes the leading
//! correction term. The digit count is the agreement between the full
//! extrapolation and one that ignores the last tenth of the data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use popstack_fit::SeriesTerms;

use crate::fixed::{agreed_digits, Fixed};
use crate::AsymError;

#[derive(Clone, Debug)]
pub struct GrowthEstimate {
    /// Exponential rate: the dominant singularity of the exponential
    /// generating function.
    pub mu: Fixed,
    /// 1/mu, carried at the same precision.
    pub mu_inv: Fixed,
    /// Extrapolated limit of a_n mu^n / n!.
    pub c: Fixed,
    /// Digits of c stable under dropping the last tenth of the terms.
    pub c_digits: usize,
    /// Set when fewer than 50 terms were available.
    pub partial: bool,
}

/// Extrapolates C_n = a_n mu^n / n! to its limit. `counting_terms` is read
/// as a_0, a_1, ...; mu fixes both the precision and the rate.
pub fn growth_constants(
    counting_terms: &SeriesTerms,
    mu: &Fixed,
) -> Result<GrowthEstimate, AsymError> {
    if mu.is_zero() || mu.is_negative() {
        return Err(AsymError::BadInput { message: "growth rate mu must be positive".into() });
    }
    let bits = mu.bits();
    let a = counting_terms.coeffs();
    if a.len() < 4 {
        return Err(AsymError::InsufficientTerms { needed: 4, got: a.len() });
    }

    let mut cs = Vec::with_capacity(a.len());
    let mut factorial = BigInt::one();
    let mut power = Fixed::one(bits);
    for (n, an) in a.iter().enumerate() {
        if n > 0 {
            factorial *= BigInt::from(n as u64);
            power = &power * mu;
        }
        let ratio = an / BigRational::from(factorial.clone());
        cs.push(&Fixed::from_rational(&ratio, bits) * &power);
    }

    let last = cs.len() - 1;
    let full = extrapolate(&cs, last, bits)?;
    let cut = last.saturating_sub(cs.len().div_ceil(10)).max(2);
    let short = extrapolate(&cs, cut, bits)?;
    let c_digits = agreed_digits(&full, &short);

    Ok(GrowthEstimate {
        mu: mu.clone(),
        mu_inv: &Fixed::one(bits) / mu,
        c: full,
        c_digits,
        partial: a.len() < 50,
    })
}

/// One geometric-tail step from the last three normalized values at or
/// below `upto`. A difference ratio outside (0, 0.95) is treated as no
/// usable geometric signal and the last value stands as is.
fn extrapolate(cs: &[Fixed], upto: usize, bits: u32) -> Result<Fixed, AsymError> {
    if upto < 2 {
        return Err(AsymError::InsufficientTerms { needed: 3, got: upto + 1 });
    }
    let c2 = &cs[upto];
    let c1 = &cs[upto - 1];
    let c0 = &cs[upto - 2];
    let d2 = c2 - c1;
    let d1 = c1 - c0;
    if d1.is_zero() || d2.is_zero() {
        return Ok(c2.clone());
    }
    let zero = Fixed::zero(bits);
    let cap = Fixed::from_ratio(&BigInt::from(19), &BigInt::from(20), bits);
    let r = &d2 / &d1;
    if r <= zero || r >= cap {
        return Ok(c2.clone());
    }
    let tail = &(&d2 * &r) / &(&Fixed::one(bits) - &r);
    Ok(c2 + &tail)
}
