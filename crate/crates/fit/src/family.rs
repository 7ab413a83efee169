//! Fitting the by-block-count columns f(·, k) against their conjectured
//! closed forms.
//!
//! Every column fits a rational function whose denominator factors as
//! ∏ (1 - i·x)^(k-i+1) and whose numerator has degree k(k+1)/2, matching
//! the denominator degree. The fitter knows nothing of this shape; the
//! report records whether the independently fitted result conforms.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use popstack_core::CountMatrix;

use crate::fit::{
    fit_rational_with, FitOptions, FitOutcome, NegativeCertificate, RationalFit,
};
use crate::poly::Poly;
use crate::series::SeriesTerms;
use crate::FitError;

/// ∏_{i=1}^{k} (1 - i·x)^(k-i+1); degree k(k+1)/2. k = 0 gives 1.
pub fn expected_denominator(k: usize) -> Poly {
    let mut q = Poly::one();
    for i in 1..=k {
        let factor = Poly::from_i64(&[1, -(i as i64)]);
        q = &q * &factor.pow(k - i + 1);
    }
    q
}

/// What happened for one column.
#[derive(Clone, Debug)]
pub enum RunsFitOutcome {
    Fit {
        fit: RationalFit,
        denominator_matches: bool,
        numerator_degree_matches: bool,
    },
    Negative(NegativeCertificate),
    Error(FitError),
}

/// One column's fit, compared against the conjectured shape.
#[derive(Clone, Debug)]
pub struct RunsFitReport {
    pub k: usize,
    pub outcome: RunsFitOutcome,
    pub expected_denominator: Poly,
}

impl RunsFitReport {
    /// True when a fit was found and both shape checks hold.
    pub fn conforms(&self) -> bool {
        matches!(
            self.outcome,
            RunsFitOutcome::Fit { denominator_matches: true, numerator_degree_matches: true, .. }
        )
    }
}

impl fmt::Display for RunsFitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "k: {}", self.k)?;
        match &self.outcome {
            RunsFitOutcome::Fit { fit, denominator_matches, numerator_degree_matches } => {
                writeln!(f, "denominator-matches: {}", yes_no(*denominator_matches))?;
                writeln!(f, "numerator-degree-matches: {}", yes_no(*numerator_degree_matches))?;
                write!(f, "{fit}")
            }
            RunsFitOutcome::Negative(cert) => write!(f, "{cert}"),
            RunsFitOutcome::Error(e) => write!(f, "error: {e}"),
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn fit_runs_family(
    matrix: &CountMatrix<BigInt>,
    k_range: RangeInclusive<usize>,
    d_max: usize,
) -> Vec<RunsFitReport> {
    fit_runs_family_with(matrix, k_range, d_max, 10, &FitOptions::default())
}

/// Fits each column f(·, k) for k in the range as a fresh counting series
/// (a_0 = 0 prepended) and checks the result against the conjectured
/// denominator and numerator degree. Per-column failures are reported in
/// place so one short column does not hide the others.
pub fn fit_runs_family_with(
    matrix: &CountMatrix<BigInt>,
    k_range: RangeInclusive<usize>,
    d_max: usize,
    margin: usize,
    opts: &FitOptions,
) -> Vec<RunsFitReport> {
    let mut reports = Vec::new();
    for k in k_range {
        let expected = expected_denominator(k);
        let outcome = if k < 1 || k > matrix.k_max() {
            RunsFitOutcome::Error(FitError::Bounds {
                message: format!("k = {k} is outside the matrix's stored columns"),
            })
        } else {
            let terms = SeriesTerms::counting_sequence(matrix.column(k));
            match fit_rational_with(&terms, d_max, margin, opts) {
                Err(e) => RunsFitOutcome::Error(e),
                Ok(FitOutcome::Negative(cert)) => RunsFitOutcome::Negative(cert),
                Ok(FitOutcome::Fit(fit)) => {
                    let denominator_matches = fit.denominator() == &expected;
                    let target = k * (k + 1) / 2;
                    let numerator_degree_matches = fit.numerator().degree() == Some(target);
                    RunsFitOutcome::Fit { fit, denominator_matches, numerator_degree_matches }
                }
            }
        };
        reports.push(RunsFitReport { k, outcome, expected_denominator: expected });
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use popstack_core::ring::BigIntRing;

    #[test]
    fn expected_denominators_expand_correctly() {
        assert_eq!(expected_denominator(0), Poly::one());
        assert_eq!(expected_denominator(1), Poly::from_i64(&[1, -1]));
        assert_eq!(expected_denominator(2), Poly::from_i64(&[1, -4, 5, -2]));
        assert_eq!(expected_denominator(10).degree(), Some(55));
    }

    #[test]
    fn single_block_column_is_the_geometric_tail() {
        let matrix = popstack_core::count_by_runs(&BigIntRing, 15, 1).unwrap();
        let reports = fit_runs_family(&matrix, 1..=1, 4);
        assert_eq!(reports.len(), 1);
        assert!(reports[0].conforms());
        let RunsFitOutcome::Fit { fit, .. } = &reports[0].outcome else {
            panic!("expected a fit");
        };
        // f(n, 1) = 1 for n >= 1, so the column sums to x/(1-x).
        assert_eq!(fit.numerator(), &Poly::from_i64(&[0, 1]));
        assert_eq!(fit.denominator(), &Poly::from_i64(&[1, -1]));
    }

    #[test]
    fn four_block_column_matches_its_closed_form() {
        let matrix = popstack_core::count_by_runs(&BigIntRing, 60, 4).unwrap();
        let reports = fit_runs_family(&matrix, 4..=4, 12);
        assert!(reports[0].conforms());
        let RunsFitOutcome::Fit { fit, .. } = &reports[0].outcome else {
            panic!("expected a fit");
        };
        // 2x^6·(21 - 74x + 5x^2 + 180x^3 - 144x^4) over the k = 4 product.
        let numer = &Poly::from_i64(&[0, 0, 0, 0, 0, 0, 2])
            * &Poly::from_i64(&[21, -74, 5, 180, -144]);
        assert_eq!(fit.numerator(), &numer);
        assert_eq!(fit.denominator(), &expected_denominator(4));
        let text = reports[0].to_string();
        assert!(text.contains("k: 4"));
        assert!(text.contains("denominator-matches: yes"));
    }

    #[test]
    fn short_columns_report_their_failure_without_hiding_others() {
        let matrix = popstack_core::count_by_runs(&BigIntRing, 18, 2).unwrap();
        let reports = fit_runs_family(&matrix, 1..=3, 6);
        assert!(reports[0].conforms());
        // k = 2 fits from 19 terms: denominator degree 3 needs 2·3+10.
        assert!(reports[1].conforms());
        // k = 3 is not stored in this matrix at all.
        assert!(matches!(reports[2].outcome, RunsFitOutcome::Error(FitError::Bounds { .. })));
        assert!(reports[2].to_string().contains("error:"));
    }

    #[test]
    fn too_few_terms_surface_as_per_column_errors() {
        let matrix = popstack_core::count_by_runs(&BigIntRing, 5, 2).unwrap();
        let reports = fit_runs_family(&matrix, 2..=2, 6);
        assert!(matches!(
            reports[0].outcome,
            RunsFitOutcome::Error(FitError::InsufficientTerms { .. })
        ));
    }
}
