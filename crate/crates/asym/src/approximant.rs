//! Fitting one ODE with polynomial coefficients to a window of series terms.
//!
//! An approximant of order k and degree d looks for p_0..p_k (and optionally
//! an inhomogeneity q), all of degree at most d, with
//!
//!   p_0 F + p_1 F' + ... + p_k F^(k) + q = 0
//!
//! holding on a window of coefficient rows of the given series. With
//! U unknowns the system takes U - 1 rows, so generically the kernel is one
//! dimensional. Homogeneous windows anchor at the top of the series (the
//! highest coefficient rows carry the asymptotic signal); inhomogeneous
//! windows anchor at the bottom because rows far above the degree cannot see
//! the q columns at all. All arithmetic is exact: the kernel is extracted by
//! multimodular elimination and verified over the integers, so the returned
//! ODE satisfies the window identically, not approximately.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use popstack_core::ring::{bigint_mod, FpRing};
use popstack_fit::linalg::{
    integer_kernel_vector, rational_kernel_vector, FreeColumn, IntegerSystem, LinearSystem,
    SolveOptions,
};
use popstack_fit::{DFiniteFit, Poly, SeriesTerms};
use std::fmt;

use crate::fixed::DEFAULT_PRECISION_BITS;
use crate::AsymError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApproximantConfig {
    /// ODE order k >= 1.
    pub order: usize,
    /// Max degree of every polynomial coefficient.
    pub degree: usize,
    /// Adds a polynomial inhomogeneity q of the same degree.
    pub inhomogeneous: bool,
    /// Working precision for the root finding stage downstream.
    pub precision_bits: u32,
}

impl ApproximantConfig {
    pub fn homogeneous(order: usize, degree: usize) -> Self {
        ApproximantConfig {
            order,
            degree,
            inhomogeneous: false,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }

    pub fn inhomogeneous(order: usize, degree: usize) -> Self {
        ApproximantConfig {
            order,
            degree,
            inhomogeneous: true,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }

    pub fn unknowns(&self) -> usize {
        (self.order + 1 + self.inhomogeneous as usize) * (self.degree + 1)
    }

    /// Series terms the fitted window consumes.
    pub fn needed_terms(&self) -> usize {
        self.unknowns() - 1 + self.order
    }
}

impl fmt::Display for ApproximantConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "order {}, degree {}, {}, {} bits",
            self.order,
            self.degree,
            if self.inhomogeneous { "inhomogeneous" } else { "homogeneous" },
            self.precision_bits
        )
    }
}

/// The standard grid of approximant shapes for a series with top index T:
/// a shared unknown budget of clamp(3T/10, 24, 90) split across orders 2..4,
/// homogeneous at two adjacent degrees per order plus one inhomogeneous
/// shape per order. Shapes that do not fit in the available terms are
/// dropped.
pub fn default_grid(terms: &SeriesTerms) -> Vec<ApproximantConfig> {
    if terms.is_empty() {
        return Vec::new();
    }
    let t = terms.top_index() as i64;
    let budget = (3 * t / 10).clamp(24, 90);
    let mut grid = Vec::new();
    for k in 2..=4i64 {
        for jitter in [0, 1] {
            let d = budget / (k + 1) - 1 - jitter;
            if d >= 2 {
                grid.push(ApproximantConfig::homogeneous(k as usize, d as usize));
            }
        }
    }
    for k in 2..=4i64 {
        let d = budget / (k + 2) - 1;
        if d >= 2 {
            grid.push(ApproximantConfig::inhomogeneous(k as usize, d as usize));
        }
    }
    grid.retain(|cfg| cfg.needed_terms() <= terms.len());
    grid
}

/// Rows of the window system with denominators cleared per row.
struct ApproxSystem {
    rows: Vec<Vec<BigInt>>,
    cols: usize,
}

impl LinearSystem for ApproxSystem {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn fill(&self, fp: &FpRing) -> Option<Vec<u64>> {
        let mut data = Vec::with_capacity(self.rows.len() * self.cols);
        for row in &self.rows {
            for e in row {
                data.push(bigint_mod(e, fp));
            }
        }
        Some(data)
    }

    fn log2_det_bound(&self) -> f64 {
        let width = 0.5 * (self.cols.max(2) as f64).log2();
        self.rows
            .iter()
            .map(|row| {
                let top = row.iter().map(|e| e.bits()).max().unwrap_or(1).max(1);
                top as f64 + width
            })
            .sum()
    }
}

impl IntegerSystem for ApproxSystem {
    fn integer_row(&self, i: usize) -> Vec<BigInt> {
        self.rows[i].clone()
    }
}

fn clear_denominators(row: &[BigRational]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for c in row {
        l = l.lcm(c.denom());
    }
    row.iter().map(|c| c.numer() * (&l / c.denom())).collect()
}

/// Fits the ODE shape described by `config` to `egf_terms` exactly on its
/// window. The result is not checked against held-out terms: an approximant
/// deliberately overfits the window and is only read through its singularity
/// structure.
pub fn differential_approximant(
    egf_terms: &SeriesTerms,
    config: &ApproximantConfig,
) -> Result<DFiniteFit, AsymError> {
    let k = config.order;
    let d = config.degree;
    if k == 0 {
        return Err(AsymError::BadInput { message: "ODE order must be at least 1".into() });
    }
    let a = egf_terms.coeffs();
    let needed = config.needed_terms();
    if a.len() < needed {
        return Err(AsymError::InsufficientTerms { needed, got: a.len() });
    }
    let unknowns = config.unknowns();
    let row_count = unknowns - 1;
    let rows_range: Vec<usize> = if config.inhomogeneous {
        (0..row_count).collect()
    } else {
        let hi = a.len() - 1 - k;
        (hi + 1 - row_count..=hi).collect()
    };

    let mut int_rows = Vec::with_capacity(row_count);
    for &r in &rows_range {
        let mut row: Vec<BigRational> = Vec::with_capacity(unknowns);
        for j in 0..=k {
            for s in 0..=d {
                if r < s {
                    row.push(BigRational::zero());
                    continue;
                }
                let t = r - s;
                // coefficient of x^r in x^s F^(j): a_{t+j} (t+1)(t+2)...(t+j)
                let mut rising = BigInt::one();
                for u in 1..=j {
                    rising *= BigInt::from((t + u) as u64);
                }
                row.push(&a[t + j] * BigRational::from(rising));
            }
        }
        if config.inhomogeneous {
            for s in 0..=d {
                row.push(if r == s { BigRational::one() } else { BigRational::zero() });
            }
        }
        int_rows.push(clear_denominators(&row));
    }

    let sys = ApproxSystem { rows: int_rows, cols: unknowns };
    // Normalizing the kernel at the last free column keeps weight on the
    // high-order block when the window is rank deficient (data with a
    // shorter description than the ansatz), where the first-column choice
    // tends to land on a solution with a zero leading polynomial.
    let opts = SolveOptions {
        presolve_prime: popstack_fit::DEFAULT_PRESOLVE_PRIME,
        free_column: FreeColumn::Last,
    };
    let kernel: Vec<BigRational> = match integer_kernel_vector(&sys, &opts)? {
        Some(v) => v.into_iter().map(BigRational::from).collect(),
        None => match rational_kernel_vector(&sys, &opts)? {
            Some(v) => v,
            None => return Err(AsymError::NoSolution { order: k, degree: d }),
        },
    };

    let mut polys: Vec<Poly> = kernel.chunks(d + 1).map(|c| Poly::from_coeffs(c.to_vec())).collect();
    let inhomogeneity = if config.inhomogeneous {
        polys.pop().expect("inhomogeneous ansatz has a q block")
    } else {
        Poly::zero()
    };
    if polys.iter().all(|p| p.is_zero()) {
        return Err(AsymError::ZeroLeadingPolynomial);
    }
    Ok(DFiniteFit::new(polys, inhomogeneity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(ratio: i64, len: usize) -> SeriesTerms {
        let mut v = Vec::with_capacity(len);
        let mut x = BigInt::one();
        for _ in 0..len {
            v.push(x.clone());
            x *= ratio;
        }
        SeriesTerms::from_integers(&v)
    }

    #[test]
    fn geometric_series_yields_the_first_order_ode() {
        let fit = differential_approximant(&geometric(3, 12), &ApproximantConfig::homogeneous(1, 1))
            .unwrap();
        // (1 - 3x) F' - 3 F = 0, canonically scaled so p_0 = 1.
        assert_eq!(fit.order(), 1);
        assert_eq!(fit.polys()[0], Poly::one());
        assert_eq!(fit.polys()[1], Poly::from_coeffs(vec![
            BigRational::new(BigInt::from(-1), BigInt::from(3)),
            BigRational::one(),
        ]));
        assert!(fit.inhomogeneity().is_zero());
    }

    #[test]
    fn rank_deficient_window_still_returns_a_usable_ode() {
        // The all-ones series satisfies shorter relations than the ansatz,
        // so the window system has extra kernel directions. The returned
        // vector must keep the leading polynomial nonzero and vanish at the
        // true singularity x = 1.
        let fit = differential_approximant(&geometric(1, 12), &ApproximantConfig::homogeneous(1, 1))
            .unwrap();
        let lead = &fit.polys()[1];
        assert!(!lead.is_zero());
        assert!(lead.eval(&BigRational::one()).is_zero());
    }

    #[test]
    fn inhomogeneous_window_sees_the_initial_rows() {
        let fit = differential_approximant(&geometric(2, 12), &ApproximantConfig::inhomogeneous(1, 1))
            .unwrap();
        // Whatever representative comes back (here the order drops: the
        // window admits the algebraic relation (1 - 2x) F - 1 = 0), the
        // highest nonzero polynomial must vanish at the pole x = 1/2.
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let lead = fit.polys().iter().rfind(|p| !p.is_zero()).unwrap();
        assert!(lead.eval(&half).is_zero());
    }

    #[test]
    fn too_short_a_series_is_rejected_with_the_requirement() {
        let err = differential_approximant(&geometric(2, 5), &ApproximantConfig::homogeneous(2, 3))
            .unwrap_err();
        match err {
            AsymError::InsufficientTerms { needed, got } => {
                assert_eq!(needed, 13);
                assert_eq!(got, 5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn order_zero_is_not_an_ode() {
        let err = differential_approximant(&geometric(2, 12), &ApproximantConfig::homogeneous(0, 2))
            .unwrap_err();
        assert!(matches!(err, AsymError::BadInput { .. }));
    }

    #[test]
    fn default_grid_covers_orders_two_to_four_both_kinds() {
        let terms = geometric(1, 101);
        let grid = default_grid(&terms);
        assert_eq!(grid.len(), 9);
        assert_eq!(grid.iter().filter(|c| c.inhomogeneous).count(), 3);
        for cfg in &grid {
            assert!((2..=4).contains(&cfg.order));
            assert!(cfg.needed_terms() <= terms.len());
            assert!(cfg.unknowns() <= 31);
        }
        // A longer series widens the budget.
        let wide = default_grid(&geometric(1, 301));
        assert!(wide.iter().any(|c| c.unknowns() > 80));
    }

    #[test]
    fn grid_is_empty_when_terms_cannot_hold_any_shape() {
        assert!(default_grid(&geometric(1, 8)).is_empty());
    }
}
