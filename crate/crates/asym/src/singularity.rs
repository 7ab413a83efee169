//! Singularity locations and exponents of a fitted ODE.
//!
//! Singularities of solutions sit at roots of the leading polynomial p_k.
//! At a simple root x0 the indicial relation of the regular singular point
//! gives one non-analytic local exponent
//!
//!   theta = k - 1 - p_{k-1}(x0) / p_k'(x0),
//!
//! matching (1 - x/x0)^theta behavior. Coefficients enter root finding
//! through a global power-of-two rescale (harmless: roots and the indicial
//! ratio are scale invariant), seeds come from the companion matrix in
//! double precision, and Newton runs at the requested precision plus a
//! guard. Multiple roots stall Newton and are reported without exponent;
//! roots beyond double precision range are not sought.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix};
use num_integer::Integer;
use popstack_fit::{DFiniteFit, Poly, SeriesTerms};
use std::fmt;

use crate::approximant::{differential_approximant, ApproximantConfig};
use crate::fixed::{agreed_digits_complex, digits_cap, CFixed, Fixed};
use crate::AsymError;

const WORK_GUARD_BITS: u32 = 64;
const NEWTON_MAX_ITERS: usize = 400;
const SCHUR_ITERS_PER_DIM: usize = 200;

#[derive(Clone, Debug)]
pub struct SingularityEstimate {
    pub location: CFixed,
    /// Real part of the indicial exponent; None at multiple roots.
    pub exponent: Option<Fixed>,
    pub multiple: bool,
    /// Leading decimal digits on which every contributing approximant
    /// agrees; 0 for a singleton cluster, the precision cap for estimates
    /// read off a single ODE directly.
    pub agreed_digits: usize,
    pub contributors: Vec<ApproximantConfig>,
}

impl fmt::Display for SingularityEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x = {}", self.location)?;
        match &self.exponent {
            Some(e) => write!(f, " | exponent {e}")?,
            None if self.multiple => write!(f, " | multiple root, no exponent")?,
            None => write!(f, " | no exponent")?,
        }
        write!(f, " | agreed digits {} | approximants {}", self.agreed_digits, self.contributors.len())
    }
}

fn coeff_log2(p: &Poly) -> Option<i64> {
    p.coeffs()
        .iter()
        .filter(|c| c.numer().bits() > 0)
        .map(|c| c.numer().bits() as i64 - c.denom().bits() as i64)
        .max()
}

/// Common power-of-two magnitude of the ODE coefficients.
fn global_shift(ode: &DFiniteFit) -> i64 {
    ode.polys()
        .iter()
        .chain(std::iter::once(ode.inhomogeneity()))
        .filter_map(coeff_log2)
        .max()
        .unwrap_or(0)
}

fn poly_fixed(p: &Poly, shift: i64, bits: u32) -> Vec<Fixed> {
    p.coeffs().iter().map(|c| Fixed::from_rational_pow2(c, -shift, bits)).collect()
}

fn deriv(coeffs: &[Fixed]) -> Vec<Fixed> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c.mul_i64(i as i64)).collect()
}

fn eval(coeffs: &[Fixed], z: &CFixed) -> CFixed {
    let mut acc = CFixed::zero(z.bits());
    for c in coeffs.iter().rev() {
        acc = acc.mul(z);
        acc = CFixed::new(&acc.re + c, acc.im);
    }
    acc
}

/// |a - b| <= 2^-log2_tol relative to the larger modulus.
fn near(a: &CFixed, b: &CFixed, log2_tol: i64) -> bool {
    let d2 = a.sub(b).modulus_sq();
    if d2.is_zero() {
        return true;
    }
    let s2 = a.modulus_sq().max(b.modulus_sq());
    let Some(sl) = s2.log2_abs() else {
        return false;
    };
    d2.log2_abs().expect("nonzero") - sl <= -2 * log2_tol
}

fn companion_seeds(coeffs: &[Fixed]) -> Result<Vec<Complex<f64>>, AsymError> {
    let cf: Vec<f64> = coeffs.iter().map(Fixed::to_f64).collect();
    let top = cf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !top.is_finite() || top == 0.0 {
        return Err(AsymError::RootFinding {
            message: "leading polynomial does not convert to double precision".into(),
        });
    }
    let seed_deg = cf
        .iter()
        .rposition(|v| v.abs() > top * 1e-300)
        .expect("a maximal coefficient exists");
    if seed_deg == 0 {
        return Err(AsymError::RootFinding {
            message: "every root lies beyond double precision range".into(),
        });
    }
    let mut seeds = Vec::with_capacity(seed_deg);
    collect_seeds(&cf[..=seed_deg], top, &mut seeds)?;
    if seeds.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(AsymError::RootFinding { message: "eigenvalue seeds are not finite".into() });
    }
    Ok(seeds)
}

/// Seeds for a polynomial whose last coefficient is live. Zero roots are
/// split off and polynomials in x^g are unwound into g-th roots of the
/// compressed polynomial's seeds before any matrix work: exactly those
/// shapes ((1/2)^d - x^d and friends, common on rank-deficient windows)
/// have g-fold symmetric spectra on which shifted QR can cycle. The
/// residual dense iteration is bounded instead of trusted to terminate.
fn collect_seeds(cf: &[f64], top: f64, out: &mut Vec<Complex<f64>>) -> Result<(), AsymError> {
    let live = |i: usize| cf[i].abs() > top * 1e-300;
    let lead = cf.len() - 1;
    let low = (0..=lead).find(|&i| live(i)).expect("the leading coefficient is live");
    out.extend(std::iter::repeat(Complex::new(0.0, 0.0)).take(low));
    if low == lead {
        return Ok(());
    }
    let g = (low + 1..=lead).filter(|&i| live(i)).fold(0usize, |acc, i| acc.gcd(&(i - low)));
    if g > 1 {
        let compressed: Vec<f64> =
            (0..=(lead - low) / g).map(|j| cf[low + j * g]).collect();
        let mut inner = Vec::new();
        collect_seeds(&compressed, top, &mut inner)?;
        for w in inner {
            let radius = w.norm().powf(1.0 / g as f64);
            let base = w.arg() / g as f64;
            for j in 0..g {
                let angle = base + std::f64::consts::TAU * j as f64 / g as f64;
                out.push(Complex::from_polar(radius, angle));
            }
        }
        return Ok(());
    }
    let n = lead - low;
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if j + 1 == n {
            -cf[low + i] / cf[lead]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    if m.iter().any(|v| !v.is_finite()) {
        return Err(AsymError::RootFinding {
            message: "companion matrix overflows double precision".into(),
        });
    }
    let Some(schur) = Schur::try_new(m, f64::EPSILON, SCHUR_ITERS_PER_DIM * n) else {
        return Err(AsymError::RootFinding { message: "eigenvalue iteration stalled".into() });
    };
    out.extend(schur.complex_eigenvalues().iter().copied());
    Ok(())
}

/// Newton polish against the exact-precision coefficients. The convergence
/// flag is the multiplicity signal: simple roots converge quadratically,
/// multiple roots stall near the conditioning floor.
fn newton(coeffs: &[Fixed], dcoeffs: &[Fixed], seed: Complex<f64>, bits: u32) -> (CFixed, bool) {
    let mut z = CFixed::from_f64s(seed.re, seed.im, bits).expect("finite seed");
    let tol2 = -2 * (bits as i64 - 8);
    for _ in 0..NEWTON_MAX_ITERS {
        let f = eval(coeffs, &z);
        if f.is_zero() {
            return (z, true);
        }
        let df = eval(dcoeffs, &z);
        if df.modulus_sq().is_zero() {
            return (z, false);
        }
        let dz = f.div(&df);
        z = z.sub(&dz);
        let step2 = dz.modulus_sq();
        if step2.is_zero() {
            return (z, true);
        }
        let scale = z.modulus_sq().log2_abs().unwrap_or(0);
        if step2.log2_abs().expect("nonzero") - scale <= tol2 {
            return (z, true);
        }
    }
    (z, false)
}

struct RootGroup {
    location: CFixed,
    size: usize,
    converged: bool,
}

fn group_roots(polished: &[(CFixed, bool)], bits: u32) -> Result<Vec<RootGroup>, AsymError> {
    // Grouping radius sits far below any genuine root separation and far
    // above the stall floor of a high-multiplicity root.
    let tol = bits as i64 / 4;
    let mut groups: Vec<RootGroup> = Vec::new();
    'roots: for (z, conv) in polished {
        for g in groups.iter_mut() {
            if near(&g.location, z, tol) {
                g.size += 1;
                g.converged = g.converged && *conv;
                continue 'roots;
            }
        }
        groups.push(RootGroup { location: z.clone(), size: 1, converged: *conv });
    }
    if groups.iter().any(|g| g.size == 1 && !g.converged) {
        return Err(AsymError::RootFinding {
            message: "an isolated root did not converge at the requested precision".into(),
        });
    }
    Ok(groups)
}

fn exponent_at(ode: &DFiniteFit, keff: usize, shift: i64, x0: &CFixed, bits: u32) -> Option<Fixed> {
    if keff == 0 {
        // Order zero: p_0 F + q = 0, so F = -q/p_0 has a simple pole where
        // q does not also vanish.
        let q = poly_fixed(ode.inhomogeneity(), shift, bits);
        let qv = eval(&q, x0);
        let clearly_nonzero =
            qv.modulus_sq().log2_abs().is_some_and(|l| l >= -(bits as i64));
        return clearly_nonzero.then(|| Fixed::from_i64(-1, bits));
    }
    let pm1 = poly_fixed(&ode.polys()[keff - 1], shift, bits);
    let dlead = deriv(&poly_fixed(&ode.polys()[keff], shift, bits));
    let den = eval(&dlead, x0);
    if den.modulus_sq().is_zero() {
        return None;
    }
    let num = eval(&pm1, x0);
    let theta = CFixed::real(Fixed::from_i64(keff as i64 - 1, bits)).sub(&num.div(&den));
    Some(theta.re)
}

/// All finite singularity candidates of one fitted ODE, ordered by modulus.
/// Estimates off a single ODE carry the precision cap as agreed digits;
/// cross-checking against other approximants happens in [`analyze`].
pub fn singularities(
    ode: &DFiniteFit,
    precision_bits: u32,
) -> Result<Vec<SingularityEstimate>, AsymError> {
    let polys = ode.polys();
    let keff =
        polys.iter().rposition(|p| !p.is_zero()).ok_or(AsymError::ZeroLeadingPolynomial)?;
    let lead = &polys[keff];
    let deg = lead.degree().expect("nonzero polynomial has a degree");
    if deg == 0 {
        return Ok(Vec::new());
    }
    let work = precision_bits + WORK_GUARD_BITS;
    let shift = global_shift(ode);
    let lead_fixed = poly_fixed(lead, shift, work);
    let dlead_fixed = deriv(&lead_fixed);
    let seeds = companion_seeds(&lead_fixed)?;
    let polished: Vec<(CFixed, bool)> =
        seeds.into_iter().map(|s| newton(&lead_fixed, &dlead_fixed, s, work)).collect();
    let groups = group_roots(&polished, work)?;

    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let multiple = g.size > 1;
        let exponent =
            if multiple { None } else { exponent_at(ode, keff, shift, &g.location, work) };
        out.push(SingularityEstimate {
            location: g.location.with_bits(precision_bits),
            exponent: exponent.map(|e| e.with_bits(precision_bits)),
            multiple,
            agreed_digits: digits_cap(precision_bits),
            contributors: Vec::new(),
        });
    }
    out.sort_by(|a, b| a.location.modulus_sq().cmp(&b.location.modulus_sq()));
    Ok(out)
}

/// Runs every approximant in the grid, pools the singularity estimates, and
/// clusters them at relative 1e-3. Conjugate partners are folded into the
/// upper half plane first, so a complex pair appears once. Cluster location
/// and exponent are member means; agreed digits are the worst pairwise
/// agreement across members, 0 for singletons. Failing approximants are
/// skipped; it is an error only when all of them fail.
pub fn analyze(
    egf_terms: &SeriesTerms,
    grid: &[ApproximantConfig],
) -> Result<Vec<SingularityEstimate>, AsymError> {
    if grid.is_empty() {
        return Err(AsymError::BadInput { message: "empty approximant grid".into() });
    }
    let bits = grid.iter().map(|c| c.precision_bits).max().expect("nonempty grid");

    struct Member {
        location: CFixed,
        exponent: Option<Fixed>,
        multiple: bool,
        config: ApproximantConfig,
    }

    let mut pool: Vec<Member> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for cfg in grid {
        let run = differential_approximant(egf_terms, cfg)
            .and_then(|ode| singularities(&ode, cfg.precision_bits));
        match run {
            Ok(ests) => {
                let mut local: Vec<Member> = Vec::new();
                'est: for e in ests {
                    let loc = if e.location.im.is_negative() {
                        e.location.conj()
                    } else {
                        e.location
                    };
                    let loc = loc.with_bits(bits);
                    // The mirror of a conjugate pair folds onto its partner.
                    for seen in &local {
                        if near(&seen.location, &loc, 20) {
                            continue 'est;
                        }
                    }
                    local.push(Member {
                        location: loc,
                        exponent: e.exponent.map(|x| x.with_bits(bits)),
                        multiple: e.multiple,
                        config: *cfg,
                    });
                }
                pool.extend(local);
            }
            Err(err) => failures.push(format!("[{cfg}] {err}")),
        }
    }
    if pool.is_empty() {
        let message = if failures.is_empty() {
            "no approximant produced a singularity".into()
        } else {
            failures.join("; ")
        };
        return Err(AsymError::AllFailed { message });
    }

    pool.sort_by(|a, b| {
        a.location
            .modulus_sq()
            .cmp(&b.location.modulus_sq())
            .then_with(|| a.location.re.cmp(&b.location.re))
            .then_with(|| a.location.im.cmp(&b.location.im))
    });
    let mut clusters: Vec<Vec<Member>> = Vec::new();
    'pool: for m in pool {
        for cl in clusters.iter_mut() {
            // 2^-10 is within a hair of the 1e-3 clustering radius.
            if near(&cl[0].location, &m.location, 10) {
                cl.push(m);
                continue 'pool;
            }
        }
        clusters.push(vec![m]);
    }

    let mut out = Vec::with_capacity(clusters.len());
    for cl in clusters {
        let n = cl.len();
        let inv_n = &Fixed::one(bits) / &Fixed::from_i64(n as i64, bits);
        let mut sum = CFixed::zero(bits);
        for m in &cl {
            sum = sum.add(&m.location);
        }
        let location = sum.mul_real(&inv_n);
        let exps: Vec<&Fixed> = cl.iter().filter_map(|m| m.exponent.as_ref()).collect();
        let exponent = if exps.is_empty() {
            None
        } else {
            let mut s = Fixed::zero(bits);
            for e in &exps {
                s = &s + *e;
            }
            Some(&s / &Fixed::from_i64(exps.len() as i64, bits))
        };
        let agreed = if n == 1 {
            0
        } else {
            let mut worst = digits_cap(bits);
            for i in 0..n {
                for j in i + 1..n {
                    worst = worst.min(agreed_digits_complex(&cl[i].location, &cl[j].location));
                }
            }
            worst
        };
        out.push(SingularityEstimate {
            location,
            exponent,
            multiple: cl.iter().any(|m| m.multiple),
            agreed_digits: agreed,
            contributors: cl.iter().map(|m| m.config).collect(),
        });
    }
    out.sort_by(|a, b| a.location.modulus_sq().cmp(&b.location.modulus_sq()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::agreed_digits;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    fn geometric(ratio: i64, len: usize) -> SeriesTerms {
        let mut v = Vec::with_capacity(len);
        let mut x = BigInt::one();
        for _ in 0..len {
            v.push(x.clone());
            x *= ratio;
        }
        SeriesTerms::from_integers(&v)
    }

    /// Terms of (1 - lambda x)^gamma.
    fn binomial_series(gamma: &BigRational, lambda: &BigRational, len: usize) -> SeriesTerms {
        let mut coeffs = Vec::with_capacity(len);
        let neg_lambda = -lambda.clone();
        let mut b = BigRational::one();
        for n in 0..len {
            coeffs.push(b.clone());
            let nq = BigRational::from(BigInt::from(n as u64));
            let step = (gamma - &nq) / (&nq + BigRational::one());
            b = b * step * &neg_lambda;
        }
        SeriesTerms::new(coeffs)
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn geometric_ode_locates_the_pole_to_working_precision() {
        let ode =
            differential_approximant(&geometric(3, 12), &ApproximantConfig::homogeneous(1, 1))
                .unwrap();
        let ests = singularities(&ode, 256).unwrap();
        assert_eq!(ests.len(), 1);
        let est = &ests[0];
        let truth = CFixed::real(Fixed::from_ratio(&BigInt::one(), &BigInt::from(3), 256));
        assert!(agreed_digits_complex(&est.location, &truth) >= 70);
        assert!(!est.multiple);
        let theta = est.exponent.as_ref().unwrap();
        assert!(agreed_digits(theta, &Fixed::from_i64(-1, 256)) >= 70);
    }

    #[test]
    fn square_root_singularity_has_exponent_one_half() {
        let terms = binomial_series(&rational(1, 2), &rational(4, 1), 12);
        let ode = differential_approximant(&terms, &ApproximantConfig::homogeneous(1, 1)).unwrap();
        let ests = singularities(&ode, 256).unwrap();
        assert_eq!(ests.len(), 1);
        let truth = CFixed::real(Fixed::from_ratio(&BigInt::one(), &BigInt::from(4), 256));
        assert!(agreed_digits_complex(&ests[0].location, &truth) >= 70);
        let theta = ests[0].exponent.as_ref().unwrap();
        assert!(agreed_digits(theta, &Fixed::from_ratio(&BigInt::one(), &BigInt::from(2), 256)) >= 70);
    }

    #[test]
    fn power_law_exponents_come_back_within_a_millionth() {
        let tol = Fixed::from_ratio(&BigInt::one(), &BigInt::from(1_000_000u32), 256);
        for gamma in [rational(-2, 1), rational(-1, 1), rational(-1, 2), rational(1, 2)] {
            for lambda in [rational(1, 1), rational(1, 3)] {
                let terms = binomial_series(&gamma, &lambda, 61);
                let grid = [
                    ApproximantConfig::homogeneous(1, 1),
                    ApproximantConfig::homogeneous(2, 2),
                ];
                let ests = analyze(&terms, &grid).unwrap();
                let target = CFixed::real(Fixed::from_rational(&lambda.recip(), 256));
                let nearest = ests
                    .iter()
                    .filter(|e| e.exponent.is_some())
                    .min_by(|a, b| {
                        let da = a.location.sub(&target).modulus_sq();
                        let db = b.location.sub(&target).modulus_sq();
                        da.cmp(&db)
                    })
                    .unwrap_or_else(|| panic!("no exponent near 1/{lambda} for {gamma}"));
                let theta = nearest.exponent.as_ref().unwrap();
                let want = Fixed::from_rational(&gamma, 256);
                let err = (theta - &want).abs();
                assert!(
                    err <= tol,
                    "gamma {gamma} lambda {lambda}: exponent {theta} is off"
                );
            }
        }
    }

    #[test]
    fn repeated_roots_are_flagged_without_exponent() {
        // p_1 = (1 - 2x)^2 (1 - 3x), a double root at 1/2 and a simple one
        // at 1/3 with indicial exponent -p_0(1/3)/p_1'(1/3) = 3.
        let one_minus_2x = Poly::from_i64(&[1, -2]);
        let lead = &(&one_minus_2x * &one_minus_2x) * &Poly::from_i64(&[1, -3]);
        let ode = DFiniteFit::new(vec![Poly::one(), lead], Poly::zero());
        let ests = singularities(&ode, 192).unwrap();
        assert_eq!(ests.len(), 2);

        let third = CFixed::real(Fixed::from_ratio(&BigInt::one(), &BigInt::from(3), 192));
        assert!(agreed_digits_complex(&ests[0].location, &third) >= 50);
        assert!(!ests[0].multiple);
        let theta = ests[0].exponent.as_ref().unwrap();
        assert!(agreed_digits(theta, &Fixed::from_i64(3, 192)) >= 50);

        let half = CFixed::real(Fixed::from_ratio(&BigInt::one(), &BigInt::from(2), 192));
        assert!(ests[1].multiple);
        assert!(ests[1].exponent.is_none());
        assert!(agreed_digits_complex(&ests[1].location, &half) >= 20);
    }

    #[test]
    fn conjugate_pair_is_reported_once_and_ordered_by_modulus() {
        // 1/((1 + x^2)(1 - x/2)): poles at +-i and at 2.
        let half = rational(1, 2);
        let prev = |a: &[BigRational], i: isize| {
            if i < 0 {
                BigRational::zero()
            } else {
                a[i as usize].clone()
            }
        };
        let mut a = vec![BigRational::one()];
        for n in 1..40isize {
            let val = &half * prev(&a, n - 1) - prev(&a, n - 2) + &half * prev(&a, n - 3);
            a.push(val);
        }
        let terms = SeriesTerms::new(a);
        let ests = analyze(&terms, &[ApproximantConfig::homogeneous(1, 3)]).unwrap();
        assert_eq!(ests.len(), 2);

        let i_unit = CFixed::new(Fixed::zero(256), Fixed::one(256));
        assert!(agreed_digits_complex(&ests[0].location, &i_unit) >= 60);
        assert!(!ests[0].location.im.is_negative());
        let two = CFixed::real(Fixed::from_i64(2, 256));
        assert!(agreed_digits_complex(&ests[1].location, &two) >= 60);
        for e in &ests {
            // Simple poles of a rational function.
            let theta = e.exponent.as_ref().unwrap();
            assert!(agreed_digits(theta, &Fixed::from_i64(-1, 256)) >= 50);
            assert_eq!(e.agreed_digits, 0, "singleton clusters have no cross-agreement");
            assert_eq!(e.contributors.len(), 1);
        }
    }

    #[test]
    fn order_zero_relation_reports_a_simple_pole() {
        // The inhomogeneous window on 2^n tends to collapse to
        // (1 - 2x) F - 1 = 0; either way the estimate is a pole at 1/2.
        let ode =
            differential_approximant(&geometric(2, 12), &ApproximantConfig::inhomogeneous(1, 1))
                .unwrap();
        let ests = singularities(&ode, 192).unwrap();
        assert_eq!(ests.len(), 1);
        let half = CFixed::real(Fixed::from_ratio(&BigInt::one(), &BigInt::from(2), 192));
        assert!(agreed_digits_complex(&ests[0].location, &half) >= 50);
        let theta = ests[0].exponent.as_ref().unwrap();
        assert!(agreed_digits(theta, &Fixed::from_i64(-1, 192)) >= 50);
    }

    #[test]
    fn all_zero_ode_is_rejected() {
        let ode = DFiniteFit::new(vec![Poly::zero(), Poly::zero()], Poly::zero());
        assert!(matches!(singularities(&ode, 128), Err(AsymError::ZeroLeadingPolynomial)));
    }

    #[test]
    fn constant_leading_polynomial_has_no_finite_singularities() {
        let ode = DFiniteFit::new(vec![Poly::from_i64(&[0, 1]), Poly::one()], Poly::zero());
        assert!(singularities(&ode, 128).unwrap().is_empty());
    }

    #[test]
    fn analyze_reports_when_every_shape_fails() {
        let err = analyze(&geometric(2, 5), &[ApproximantConfig::homogeneous(3, 9)]).unwrap_err();
        assert!(matches!(err, AsymError::AllFailed { .. }));
        assert!(matches!(
            analyze(&geometric(2, 30), &[]),
            Err(AsymError::BadInput { .. })
        ));
    }
}
