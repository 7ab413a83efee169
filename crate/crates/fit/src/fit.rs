//! The ansatz searches, their fits, and certified negative results.
//!
//! Each family searches a finite region of parameter cells in a fixed
//! ascending order, so a returned fit is minimal for that order. A cell is
//! screened modulo the presolve prime; only a nontrivial modular kernel
//! triggers the exact solve. The searched regions are monotone: a solution
//! at a cell embeds into any componentwise-larger cell by zero padding (and,
//! for D-finite cells, a larger order only removes equations), so a full
//! column rank certificate at the maximal (frontier) cells certifies the
//! whole region. That keeps negative runs at a handful of eliminations.
//!
//! Region disciplines, for terms a_0..a_n and a confirmation margin:
//!
//! * rational: d ≤ min(d_max, ⌊(n − margin)/2⌋), system rows x^{d+1}..x^n
//!   in q_0..q_d (the p rows are determined by q and are dropped);
//! * algebraic: (m+1)(d+1) ≤ n + 2 − margin, rows x^0..x^n;
//! * D-finite: (k+2)(d+1) ≤ min(n + 2 − margin, n + 1 − k); the second cap
//!   exists because a coefficient row of F^(k) needs a term k places deeper,
//!   so only n + 1 − k equations are available at order k and cells beyond
//!   that are underdetermined and certify nothing.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use popstack_core::ring::{FpRing, Ring};

use crate::linalg::{
    modular_echelon, rat_mod, rational_kernel_vector, LinearSystem, SolveOptions,
    DEFAULT_PRESOLVE_PRIME,
};
use crate::poly::{coeff_list, Poly};
use crate::series::{derivative_trunc, SeriesTerms};
use crate::FitError;

/// Knobs for the fitting searches. Nothing here is randomized; the presolve
/// prime is fixed by default and overridable for testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitOptions {
    pub presolve_prime: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { presolve_prime: DEFAULT_PRESOLVE_PRIME }
    }
}

impl FitOptions {
    fn solve(&self) -> SolveOptions {
        SolveOptions { presolve_prime: self.presolve_prime, ..SolveOptions::default() }
    }
}

/// A parameter cell: `order` is m for algebraic fits, k for D-finite fits,
/// and 1 for the rational family; `degree` bounds the polynomial degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub order: usize,
    pub degree: usize,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.order, self.degree)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzFamily {
    Rational,
    Algebraic,
    DFinite,
}

impl AnsatzFamily {
    pub fn name(self) -> &'static str {
        match self {
            AnsatzFamily::Rational => "rational",
            AnsatzFamily::Algebraic => "algebraic",
            AnsatzFamily::DFinite => "d-finite",
        }
    }
}

/// The parameter region a negative certificate speaks for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchedBounds {
    Rational { d_searched: usize },
    Algebraic { m_max: usize, d_max: usize, product_cap: usize },
    DFinite { k_max: usize, d_max: usize, product_cap: usize },
}

impl fmt::Display for SearchedBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchedBounds::Rational { d_searched } => write!(f, "d <= {d_searched}"),
            SearchedBounds::Algebraic { m_max, d_max, product_cap } => {
                write!(f, "m <= {m_max}, d <= {d_max}, (m+1)(d+1) <= {product_cap}")
            }
            SearchedBounds::DFinite { k_max, d_max, product_cap } => write!(
                f,
                "k <= {k_max}, d <= {d_max}, (k+2)(d+1) <= min({product_cap}, terms-used - k)"
            ),
        }
    }
}

/// The exact claim that no nontrivial solution exists within the stated
/// bounds given the stated terms, witnessed by full column rank of the
/// frontier systems. [`recheck_negative`] re-derives the claim with an
/// independently chosen prime.
#[derive(Clone, Debug)]
pub struct NegativeCertificate {
    pub family: AnsatzFamily,
    pub bounds: SearchedBounds,
    pub terms_used: usize,
    pub margin: usize,
    pub frontier: Vec<Cell>,
    pub presolve_prime: u64,
}

impl fmt::Display for NegativeCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: {}", self.family.name())?;
        writeln!(f, "result: no nontrivial fit within the searched bounds")?;
        writeln!(f, "searched: {}", self.bounds)?;
        writeln!(f, "terms-used: {}", self.terms_used)?;
        writeln!(f, "margin: {}", self.margin)?;
        let cells: Vec<String> = self.frontier.iter().map(Cell::to_string).collect();
        writeln!(f, "frontier: {}", cells.join(" "))?;
        write!(f, "presolve-prime: {}", self.presolve_prime)
    }
}

/// Either a verified fit or a certificate that none exists in the region.
#[derive(Clone, Debug)]
pub enum FitOutcome<T> {
    Fit(T),
    Negative(NegativeCertificate),
}

impl<T> FitOutcome<T> {
    pub fn into_fit(self) -> Option<T> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::Negative(_) => None,
        }
    }

    pub fn as_fit(&self) -> Option<&T> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::Negative(_) => None,
        }
    }

    pub fn as_negative(&self) -> Option<&NegativeCertificate> {
        match self {
            FitOutcome::Fit(_) => None,
            FitOutcome::Negative(c) => Some(c),
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, FitOutcome::Negative(_))
    }
}

/// p/q with q(x)·F(x) − p(x) ≡ 0 through all supplied terms. Canonical:
/// numerator and denominator coprime, and the denominator's constant term
/// is 1 (or its lowest nonzero coefficient 1 when the constant term is 0).
#[derive(Clone, Debug)]
pub struct RationalFit {
    numerator: Poly,
    denominator: Poly,
    confirmation: usize,
}

impl RationalFit {
    pub fn new(numerator: Poly, denominator: Poly) -> Self {
        Self::with_confirmation(numerator, denominator, 0)
    }

    pub fn with_confirmation(numerator: Poly, denominator: Poly, confirmation: usize) -> Self {
        let (numerator, denominator) = canonical_pair(numerator, denominator);
        RationalFit { numerator, denominator, confirmation }
    }

    pub fn numerator(&self) -> &Poly {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly {
        &self.denominator
    }

    /// Terms beyond the 2d+2 needed to pin the coefficients, per the search
    /// that produced the fit; 0 for hand-constructed fits.
    pub fn confirmation(&self) -> usize {
        self.confirmation
    }

    /// The power series of p/q to `len` terms; requires q(0) ≠ 0.
    pub fn expand(&self, len: usize) -> Vec<BigRational> {
        let q0 = self.denominator.coeff(0);
        assert!(!q0.is_zero(), "expansion needs an invertible denominator constant term");
        let mut out = Vec::with_capacity(len);
        let inv0 = q0.recip();
        for t in 0..len {
            let mut acc = self.numerator.coeff(t);
            for j in 1..=t.min(self.denominator.coeffs().len().saturating_sub(1)) {
                acc -= &self.denominator.coeffs()[j] * &out[t - j];
            }
            out.push(acc * &inv0);
        }
        out
    }

    pub fn verifies(&self, terms: &SeriesTerms) -> bool {
        let a = terms.coeffs();
        let q = self.denominator.coeffs();
        for i in 0..a.len() {
            let mut acc = BigRational::zero();
            for (j, qj) in q.iter().enumerate().take(i + 1) {
                if !qj.is_zero() {
                    acc += qj * &a[i - j];
                }
            }
            if acc != self.numerator.coeff(i) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for RationalFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: rational")?;
        writeln!(f, "numerator: {}", coeff_list(&self.numerator))?;
        writeln!(f, "denominator: {}", coeff_list(&self.denominator))?;
        write!(f, "confirmation-terms: {}", self.confirmation)
    }
}

/// Polynomials p_0..p_m with Σ p_i(x)·F(x)^i ≡ 0 through all supplied
/// terms; scaled so the first nonzero coefficient (scanning p_0, p_1, …,
/// each by ascending power) is 1.
#[derive(Clone, Debug)]
pub struct AlgebraicFit {
    polys: Vec<Poly>,
    confirmation: usize,
}

impl AlgebraicFit {
    pub fn new(polys: Vec<Poly>) -> Self {
        Self::with_confirmation(polys, 0)
    }

    pub fn with_confirmation(mut polys: Vec<Poly>, confirmation: usize) -> Self {
        assert!(polys.len() >= 2, "an algebraic fit needs order m >= 1");
        canonical_scale(&mut polys);
        AlgebraicFit { polys, confirmation }
    }

    /// p_0..p_m.
    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn order(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn confirmation(&self) -> usize {
        self.confirmation
    }

    pub fn verifies(&self, terms: &SeriesTerms) -> bool {
        let a = terms.coeffs();
        let len = a.len();
        let mut acc = vec![BigRational::zero(); len];
        let mut power = vec![BigRational::zero(); len];
        if !power.is_empty() {
            power[0] = BigRational::one();
        }
        for (i, p) in self.polys.iter().enumerate() {
            if i > 0 {
                power = crate::series::mul_trunc(&power, a, len);
            }
            add_poly_times_series(&mut acc, p, &power);
        }
        acc.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for AlgebraicFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: algebraic")?;
        writeln!(f, "order: {}", self.order())?;
        for (i, p) in self.polys.iter().enumerate() {
            writeln!(f, "p{}: {}", i, coeff_list(p))?;
        }
        write!(f, "confirmation-terms: {}", self.confirmation)
    }
}

/// Polynomials p_0..p_k and inhomogeneity q with
/// Σ p_j(x)·F^(j)(x) + q(x) ≡ 0 through every coefficient the supplied
/// terms determine (rows x^0..x^{n−k}); scaled like [`AlgebraicFit`], with
/// q scanned last.
#[derive(Clone, Debug)]
pub struct DFiniteFit {
    polys: Vec<Poly>,
    inhomogeneity: Poly,
    confirmation: usize,
}

impl DFiniteFit {
    pub fn new(polys: Vec<Poly>, inhomogeneity: Poly) -> Self {
        Self::with_confirmation(polys, inhomogeneity, 0)
    }

    pub fn with_confirmation(mut polys: Vec<Poly>, inhomogeneity: Poly, confirmation: usize) -> Self {
        assert!(!polys.is_empty(), "a D-finite fit needs at least p_0");
        polys.push(inhomogeneity);
        canonical_scale(&mut polys);
        let inhomogeneity = polys.pop().expect("pushed above");
        DFiniteFit { polys, inhomogeneity, confirmation }
    }

    /// p_0..p_k.
    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn inhomogeneity(&self) -> &Poly {
        &self.inhomogeneity
    }

    pub fn order(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn confirmation(&self) -> usize {
        self.confirmation
    }

    pub fn verifies(&self, terms: &SeriesTerms) -> bool {
        let a = terms.coeffs();
        let k = self.order();
        if a.len() <= k {
            // No coefficient rows are determined; vacuously true.
            return true;
        }
        let rows = a.len() - k;
        let mut acc = vec![BigRational::zero(); rows];
        let mut deriv = a.to_vec();
        for (j, p) in self.polys.iter().enumerate() {
            if j > 0 {
                deriv = derivative_trunc(&deriv);
            }
            add_poly_times_series(&mut acc, p, &deriv);
        }
        for (t, qt) in self.inhomogeneity.coeffs().iter().enumerate().take(rows) {
            acc[t] += qt;
        }
        acc.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for DFiniteFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: d-finite")?;
        writeln!(f, "order: {}", self.order())?;
        for (j, p) in self.polys.iter().enumerate() {
            writeln!(f, "p{}: {}", j, coeff_list(p))?;
        }
        writeln!(f, "q: {}", coeff_list(&self.inhomogeneity))?;
        write!(f, "confirmation-terms: {}", self.confirmation)
    }
}

/// Any fit, for dispatching verification.
#[derive(Clone, Debug)]
pub enum Fit {
    Rational(RationalFit),
    Algebraic(AlgebraicFit),
    DFinite(DFiniteFit),
}

impl From<RationalFit> for Fit {
    fn from(f: RationalFit) -> Fit {
        Fit::Rational(f)
    }
}

impl From<AlgebraicFit> for Fit {
    fn from(f: AlgebraicFit) -> Fit {
        Fit::Algebraic(f)
    }
}

impl From<DFiniteFit> for Fit {
    fn from(f: DFiniteFit) -> Fit {
        Fit::DFinite(f)
    }
}

/// True iff the defining identity of the fit holds through every supplied
/// coefficient (for D-finite fits, every coefficient the terms determine),
/// by exact arithmetic.
pub fn verify_fit(fit: &Fit, terms: &SeriesTerms) -> bool {
    match fit {
        Fit::Rational(f) => f.verifies(terms),
        Fit::Algebraic(f) => f.verifies(terms),
        Fit::DFinite(f) => f.verifies(terms),
    }
}

/// acc[t] += Σ_s p_s · series[t − s], over the length of acc.
fn add_poly_times_series(acc: &mut [BigRational], p: &Poly, series: &[BigRational]) {
    for (s, ps) in p.coeffs().iter().enumerate() {
        if ps.is_zero() {
            continue;
        }
        for t in s..acc.len() {
            if t - s < series.len() {
                acc[t] += ps * &series[t - s];
            }
        }
    }
}

fn canonical_pair(p: Poly, q: Poly) -> (Poly, Poly) {
    assert!(!q.is_zero(), "a rational fit needs a nonzero denominator");
    if p.is_zero() {
        return (Poly::zero(), Poly::one());
    }
    let g = Poly::gcd(&p, &q);
    let (p, rp) = p.divrem(&g);
    let (q, rq) = q.divrem(&g);
    debug_assert!(rp.is_zero() && rq.is_zero());
    let low = q
        .coeffs()
        .iter()
        .find(|c| !c.is_zero())
        .expect("nonzero denominator")
        .recip();
    (p.scale(&low), q.scale(&low))
}

/// Scales so the first nonzero coefficient, scanning the polynomials in
/// order and each by ascending power, becomes 1.
fn canonical_scale(polys: &mut [Poly]) {
    let lead = polys
        .iter()
        .flat_map(|p| p.coeffs().iter())
        .find(|c| !c.is_zero())
        .cloned();
    if let Some(c) = lead {
        let s = c.recip();
        for p in polys.iter_mut() {
            *p = p.scale(&s);
        }
    }
}

fn residues(a: &[BigRational], fp: &FpRing) -> Option<Vec<u64>> {
    a.iter().map(|x| rat_mod(x, fp)).collect()
}

/// Sound overestimate of log2 |det| over square submatrices, given per-row
/// entry-size logs; budgets only, so generosity is fine.
fn det_bound(mut row_logs: Vec<f64>, cols: usize) -> f64 {
    row_logs.sort_by(|x, y| y.partial_cmp(x).expect("finite logs"));
    let take = cols.min(row_logs.len());
    row_logs[..take].iter().sum::<f64>() + take as f64
}

fn rational_entry_logs(a: &[BigRational]) -> (f64, f64) {
    let num_max = a.iter().map(|x| x.numer().bits()).max().unwrap_or(1) as f64;
    let den_total: u64 = a.iter().map(|x| x.denom().bits() - 1).sum();
    (num_max, den_total as f64)
}

/// Rows x^{d+1}..x^n of q·F − p = 0 in the unknowns q_0..q_d. The dropped
/// rows x^0..x^d define p uniquely from q, so kernels correspond exactly.
struct RationalTailSystem<'a> {
    a: &'a [BigRational],
    d: usize,
}

impl LinearSystem for RationalTailSystem<'_> {
    fn rows(&self) -> usize {
        self.a.len() - 1 - self.d
    }

    fn cols(&self) -> usize {
        self.d + 1
    }

    fn fill(&self, fp: &FpRing) -> Option<Vec<u64>> {
        let res = residues(self.a, fp)?;
        let mut data = Vec::with_capacity(self.rows() * self.cols());
        for i in self.d + 1..self.a.len() {
            for j in 0..=self.d {
                data.push(res[i - j]);
            }
        }
        Some(data)
    }

    fn log2_det_bound(&self) -> f64 {
        let (num_max, den_total) = rational_entry_logs(self.a);
        let row_log = num_max + den_total + ((self.d + 1) as f64).log2() / 2.0;
        det_bound(vec![row_log; self.rows()], self.cols())
    }
}

/// All rows x^0..x^n of q·F − p = 0 in q_0..q_d, p_0..p_d; used for the
/// independent recheck of negative certificates against the stated system.
struct RationalFullSystem<'a> {
    a: &'a [BigRational],
    d: usize,
}

impl LinearSystem for RationalFullSystem<'_> {
    fn rows(&self) -> usize {
        self.a.len()
    }

    fn cols(&self) -> usize {
        2 * (self.d + 1)
    }

    fn fill(&self, fp: &FpRing) -> Option<Vec<u64>> {
        let res = residues(self.a, fp)?;
        let neg_one = fp.neg(fp.one());
        let mut data = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.a.len() {
            for j in 0..=self.d {
                data.push(if j <= i { res[i - j] } else { 0 });
            }
            for j in 0..=self.d {
                data.push(if i == j { neg_one } else { 0 });
            }
        }
        Some(data)
    }

    fn log2_det_bound(&self) -> f64 {
        let (num_max, den_total) = rational_entry_logs(self.a);
        let row_log = num_max + den_total + (self.cols() as f64).log2() / 2.0;
        det_bound(vec![row_log; self.rows()], self.cols())
    }
}

/// Rows x^0..x^n of Σ p_i(x)·F^i = 0 in the (m+1)(d+1) coefficients of
/// p_0..p_m; powers of F are truncated series products.
struct AlgebraicSystem<'a> {
    a: &'a [BigRational],
    m: usize,
    d: usize,
}

impl AlgebraicSystem<'_> {
    fn fp_powers(&self, fp: &FpRing, res: &[u64]) -> Vec<Vec<u64>> {
        let len = self.a.len();
        let mut pows = Vec::with_capacity(self.m + 1);
        let mut unit = vec![0u64; len];
        unit[0] = fp.one();
        pows.push(unit);
        for i in 1..=self.m {
            pows.push(fp_mul_trunc(fp, &pows[i - 1], res, len));
        }
        pows
    }
}

impl LinearSystem for AlgebraicSystem<'_> {
    fn rows(&self) -> usize {
        self.a.len()
    }

    fn cols(&self) -> usize {
        (self.m + 1) * (self.d + 1)
    }

    fn fill(&self, fp: &FpRing) -> Option<Vec<u64>> {
        let res = residues(self.a, fp)?;
        let pows = self.fp_powers(fp, &res);
        let mut data = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.a.len() {
            for pw in &pows {
                for s in 0..=self.d {
                    data.push(if s <= r { pw[r - s] } else { 0 });
                }
            }
        }
        Some(data)
    }

    fn log2_det_bound(&self) -> f64 {
        let (num_max, den_total) = rational_entry_logs(self.a);
        let len = self.a.len() as f64;
        let row_log = self.m as f64 * (num_max + den_total + 1.0) + len;
        det_bound(vec![row_log; self.rows()], self.cols())
    }
}

/// Rows x^0..x^{n−k} of Σ p_j(x)·F^(j) + q(x) = 0 in the (k+2)(d+1)
/// coefficients of p_0..p_k and q.
struct DFiniteSystem<'a> {
    a: &'a [BigRational],
    k: usize,
    d: usize,
}

impl LinearSystem for DFiniteSystem<'_> {
    fn rows(&self) -> usize {
        self.a.len() - self.k
    }

    fn cols(&self) -> usize {
        (self.k + 2) * (self.d + 1)
    }

    fn fill(&self, fp: &FpRing) -> Option<Vec<u64>> {
        let res = residues(self.a, fp)?;
        let mut derivs = Vec::with_capacity(self.k + 1);
        derivs.push(res);
        for j in 1..=self.k {
            let prev = &derivs[j - 1];
            let next: Vec<u64> =
                (1..prev.len()).map(|t| fp.mul(&prev[t], &fp.from_u64(t as u64))).collect();
            derivs.push(next);
        }
        let rows = self.rows();
        let mut data = Vec::with_capacity(rows * self.cols());
        for r in 0..rows {
            for dv in &derivs {
                for s in 0..=self.d {
                    data.push(if s <= r { dv[r - s] } else { 0 });
                }
            }
            for s in 0..=self.d {
                data.push(if r == s { fp.one() } else { 0 });
            }
        }
        Some(data)
    }

    fn log2_det_bound(&self) -> f64 {
        let (num_max, den_total) = rational_entry_logs(self.a);
        let len = self.a.len() as f64;
        let row_log = num_max + den_total + self.k as f64 * (len + self.k as f64).log2();
        det_bound(vec![row_log; self.rows()], self.cols())
    }
}

/// b_{i+j} = Σ a_i·b_j over the field, truncated.
fn fp_mul_trunc(fp: &FpRing, a: &[u64], b: &[u64], len: usize) -> Vec<u64> {
    let mut out = vec![0u64; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            if bj != 0 {
                out[i + j] = fp.add(&out[i + j], &fp.mul(&ai, &bj));
            }
        }
    }
    out
}

pub fn fit_rational(
    terms: &SeriesTerms,
    d_max: usize,
    margin: usize,
) -> Result<FitOutcome<RationalFit>, FitError> {
    fit_rational_with(terms, d_max, margin, &FitOptions::default())
}

/// Searches d = 0, 1, …, min(d_max, ⌊(n − margin)/2⌋) ascending and returns
/// the first d admitting a nontrivial solution, verified against all
/// supplied terms; otherwise a [`NegativeCertificate`] for the whole range.
pub fn fit_rational_with(
    terms: &SeriesTerms,
    d_max: usize,
    margin: usize,
    opts: &FitOptions,
) -> Result<FitOutcome<RationalFit>, FitError> {
    if margin == 0 {
        return Err(FitError::BadMargin { margin });
    }
    if terms.is_all_zero() {
        // Degenerate input: the zero function, p = 0 and q = 1.
        return Ok(FitOutcome::Fit(RationalFit::with_confirmation(
            Poly::zero(),
            Poly::one(),
            terms.len(),
        )));
    }
    let n = terms.top_index();
    if n < margin {
        return Err(FitError::InsufficientTerms { needed: margin + 1, got: n + 1 });
    }
    let d_hi = d_max.min((n - margin) / 2);
    let a = terms.coeffs();
    let solve_opts = opts.solve();
    let negative = |_: &()| NegativeCertificate {
        family: AnsatzFamily::Rational,
        bounds: SearchedBounds::Rational { d_searched: d_hi },
        terms_used: n + 1,
        margin,
        frontier: vec![Cell { order: 1, degree: d_hi }],
        presolve_prime: opts.presolve_prime,
    };
    // A solution with deg <= d' embeds at any d >= d' by zero padding, and
    // the tail rows at d are a subset of those at d', so full rank at the
    // frontier certifies the whole range without scanning it.
    let boundary = RationalTailSystem { a, d: d_hi };
    let fences = modular_echelon(&boundary, opts.presolve_prime)?;
    if fences.nullity() == 0 {
        return Ok(FitOutcome::Negative(negative(&())));
    }
    for d in 0..=d_hi {
        let sys = RationalTailSystem { a, d };
        if d < d_hi {
            let ech = modular_echelon(&sys, opts.presolve_prime)?;
            if ech.nullity() == 0 {
                continue;
            }
        }
        let Some(q) = rational_kernel_vector(&sys, &solve_opts)? else {
            continue;
        };
        let fit = RationalFit::with_confirmation(
            numerator_from_kernel(a, d, &q),
            Poly::from_coeffs(q),
            n - 2 * d,
        );
        if fit.verifies(terms) {
            return Ok(FitOutcome::Fit(fit));
        }
    }
    Ok(FitOutcome::Negative(negative(&())))
}

/// p := the low-order part of q·F, which the dropped rows force exactly.
fn numerator_from_kernel(a: &[BigRational], d: usize, q: &[BigRational]) -> Poly {
    let mut p = Vec::with_capacity(d + 1);
    for i in 0..=d {
        let mut acc = BigRational::zero();
        for (j, qj) in q.iter().enumerate().take(i + 1) {
            if !qj.is_zero() {
                acc += qj * &a[i - j];
            }
        }
        p.push(acc);
    }
    Poly::from_coeffs(p)
}

pub fn fit_algebraic(
    terms: &SeriesTerms,
    m_max: usize,
    d_max: usize,
    margin: usize,
) -> Result<FitOutcome<AlgebraicFit>, FitError> {
    fit_algebraic_with(terms, m_max, d_max, margin, &FitOptions::default())
}

/// Searches cells by increasing (m+1)(d+1), ties by smaller m.
pub fn fit_algebraic_with(
    terms: &SeriesTerms,
    m_max: usize,
    d_max: usize,
    margin: usize,
    opts: &FitOptions,
) -> Result<FitOutcome<AlgebraicFit>, FitError> {
    if margin == 0 {
        return Err(FitError::BadMargin { margin });
    }
    if m_max < 1 {
        return Err(FitError::Bounds { message: "m_max must be at least 1".into() });
    }
    if terms.is_all_zero() {
        // F = 0 satisfies p_1 = 1 with everything else zero.
        return Ok(FitOutcome::Fit(AlgebraicFit::with_confirmation(
            vec![Poly::zero(), Poly::one()],
            terms.len(),
        )));
    }
    let n = terms.top_index();
    if n < margin {
        return Err(FitError::InsufficientTerms { needed: margin + 1, got: n + 1 });
    }
    let cap = n + 2 - margin;
    let a = terms.coeffs();
    let degree_for = |m: usize| -> Option<usize> {
        let per = cap / (m + 1);
        if per == 0 {
            return None;
        }
        Some(d_max.min(per - 1))
    };
    let cells = enumerate_cells(1, m_max, degree_for);
    if cells.is_empty() {
        return Err(FitError::InsufficientTerms { needed: margin + 1, got: n + 1 });
    }
    let frontier = frontier_cells(1, m_max, degree_for);
    let negative = || NegativeCertificate {
        family: AnsatzFamily::Algebraic,
        bounds: SearchedBounds::Algebraic { m_max, d_max, product_cap: cap },
        terms_used: n + 1,
        margin,
        frontier: frontier.clone(),
        presolve_prime: opts.presolve_prime,
    };
    let mut any_deficient = false;
    for cell in &frontier {
        let sys = AlgebraicSystem { a, m: cell.order, d: cell.degree };
        if modular_echelon(&sys, opts.presolve_prime)?.nullity() > 0 {
            any_deficient = true;
            break;
        }
    }
    if !any_deficient {
        return Ok(FitOutcome::Negative(negative()));
    }
    let solve_opts = opts.solve();
    for cell in &cells {
        let sys = AlgebraicSystem { a, m: cell.order, d: cell.degree };
        if modular_echelon(&sys, opts.presolve_prime)?.nullity() == 0 {
            continue;
        }
        let Some(v) = rational_kernel_vector(&sys, &solve_opts)? else {
            continue;
        };
        let polys = chunk_polys(&v, cell.degree + 1);
        let confirmation = (n + 1) - sys.cols() + 1;
        let fit = AlgebraicFit::with_confirmation(polys, confirmation);
        if fit.verifies(terms) {
            return Ok(FitOutcome::Fit(fit));
        }
    }
    Ok(FitOutcome::Negative(negative()))
}

pub fn fit_dfinite(
    terms: &SeriesTerms,
    k_max: usize,
    d_max: usize,
    margin: usize,
) -> Result<FitOutcome<DFiniteFit>, FitError> {
    fit_dfinite_with(terms, k_max, d_max, margin, &FitOptions::default())
}

/// Searches cells by increasing (k+2)(d+1), ties by smaller k.
pub fn fit_dfinite_with(
    terms: &SeriesTerms,
    k_max: usize,
    d_max: usize,
    margin: usize,
    opts: &FitOptions,
) -> Result<FitOutcome<DFiniteFit>, FitError> {
    if margin == 0 {
        return Err(FitError::BadMargin { margin });
    }
    if terms.is_all_zero() {
        // F = 0 satisfies p_0 = 1 with zero inhomogeneity.
        return Ok(FitOutcome::Fit(DFiniteFit::with_confirmation(
            vec![Poly::one()],
            Poly::zero(),
            terms.len(),
        )));
    }
    let n = terms.top_index();
    if n < margin {
        return Err(FitError::InsufficientTerms { needed: margin + 1, got: n + 1 });
    }
    let cap = n + 2 - margin;
    let a = terms.coeffs();
    let degree_for = |k: usize| -> Option<usize> {
        let rows = n + 1 - k;
        let per = cap.min(rows) / (k + 2);
        if per == 0 {
            return None;
        }
        Some(d_max.min(per - 1))
    };
    let k_limit = k_max.min(n);
    let cells = enumerate_cells(0, k_limit, degree_for);
    if cells.is_empty() {
        return Err(FitError::InsufficientTerms { needed: margin + 1, got: n + 1 });
    }
    let frontier = frontier_cells(0, k_limit, degree_for);
    let negative = || NegativeCertificate {
        family: AnsatzFamily::DFinite,
        bounds: SearchedBounds::DFinite { k_max, d_max, product_cap: cap },
        terms_used: n + 1,
        margin,
        frontier: frontier.clone(),
        presolve_prime: opts.presolve_prime,
    };
    let mut any_deficient = false;
    for cell in &frontier {
        let sys = DFiniteSystem { a, k: cell.order, d: cell.degree };
        if modular_echelon(&sys, opts.presolve_prime)?.nullity() > 0 {
            any_deficient = true;
            break;
        }
    }
    if !any_deficient {
        return Ok(FitOutcome::Negative(negative()));
    }
    let solve_opts = opts.solve();
    for cell in &cells {
        let sys = DFiniteSystem { a, k: cell.order, d: cell.degree };
        if modular_echelon(&sys, opts.presolve_prime)?.nullity() == 0 {
            continue;
        }
        let Some(v) = rational_kernel_vector(&sys, &solve_opts)? else {
            continue;
        };
        let mut polys = chunk_polys(&v, cell.degree + 1);
        let inhomogeneity = polys.pop().expect("q chunk present");
        let confirmation = sys.rows() - sys.cols() + 1;
        let fit = DFiniteFit::with_confirmation(polys, inhomogeneity, confirmation);
        if fit.verifies(terms) {
            return Ok(FitOutcome::Fit(fit));
        }
    }
    Ok(FitOutcome::Negative(negative()))
}

/// All searchable cells ordered by (order+offset)·(degree+1), ties by
/// smaller order; `offset` is m+1 per poly for algebraic cells and k+2 for
/// D-finite ones, but only the ordering product matters here.
fn enumerate_cells(
    order_min: usize,
    order_max: usize,
    degree_for: impl Fn(usize) -> Option<usize>,
) -> Vec<Cell> {
    let mut cells = Vec::new();
    for order in order_min..=order_max {
        let Some(dm) = degree_for(order) else { continue };
        for degree in 0..=dm {
            cells.push(Cell { order, degree });
        }
    }
    let weight = |c: &Cell| ((c.order + 2 - order_min) * (c.degree + 1), c.order);
    cells.sort_by_key(weight);
    cells
}

/// The maximal cells of the searchable region: the degree cap is
/// non-increasing in the order, so these form a staircase.
fn frontier_cells(
    order_min: usize,
    order_max: usize,
    degree_for: impl Fn(usize) -> Option<usize>,
) -> Vec<Cell> {
    let mut frontier: Vec<Cell> = Vec::new();
    for order in order_min..=order_max {
        let Some(dm) = degree_for(order) else { break };
        if let Some(last) = frontier.last() {
            debug_assert!(dm <= last.degree);
            if dm == last.degree {
                frontier.pop();
            }
        }
        frontier.push(Cell { order, degree: dm });
    }
    frontier
}

fn chunk_polys(v: &[BigRational], width: usize) -> Vec<Poly> {
    v.chunks(width).map(|c| Poly::from_coeffs(c.to_vec())).collect()
}

/// Re-derives a negative certificate's claim with the given prime: every
/// frontier cell's full stated system must have full column rank. Choosing
/// a prime different from the certificate's makes the check independent.
pub fn recheck_negative(
    cert: &NegativeCertificate,
    terms: &SeriesTerms,
    prime: u64,
) -> Result<bool, FitError> {
    if terms.len() < cert.terms_used {
        return Err(FitError::InsufficientTerms { needed: cert.terms_used, got: terms.len() });
    }
    let a = &terms.coeffs()[..cert.terms_used];
    for cell in &cert.frontier {
        let rank = match cert.family {
            AnsatzFamily::Rational => {
                let sys = RationalFullSystem { a, d: cell.degree };
                let full = sys.cols();
                (modular_echelon(&sys, prime)?.rank(), full)
            }
            AnsatzFamily::Algebraic => {
                let sys = AlgebraicSystem { a, m: cell.order, d: cell.degree };
                let full = sys.cols();
                (modular_echelon(&sys, prime)?.rank(), full)
            }
            AnsatzFamily::DFinite => {
                let sys = DFiniteSystem { a, k: cell.order, d: cell.degree };
                let full = sys.cols();
                (modular_echelon(&sys, prime)?.rank(), full)
            }
        };
        if rank.0 != rank.1 {
            return Ok(false);
        }
    }
    Ok(true)
}
