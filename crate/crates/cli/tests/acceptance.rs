//! Acceptance gate: one test per release criterion, end to end, at the
//! stated tolerances. Each test prints a single `criterion N: PASS` line
//! with the measured details (visible under `--nocapture`); a failed
//! criterion fails its test.
//!
//! The heavyweight inputs (the 300-term counting sequence, the 300x10
//! by-runs matrix, the modular CLI runs) are computed once and shared.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use popstack_asym::{
    agreed_digits, agreed_digits_complex, analyze, default_grid, growth_constants, CFixed, Fixed,
    SingularityEstimate,
};
use popstack_core::ring::{BigIntRing, FpRing};
use popstack_core::{
    brute_count, count_by_runs, count_sequence, count_slow_reference, crt_reconstruct,
    select_primes, CountMatrix, ResidueBundle, DEFAULT_PRIME_CEILING,
};
use popstack_fit::{
    expected_denominator, fit_algebraic, fit_dfinite, fit_rational, fit_runs_family,
    recheck_negative, transform_series, verify_fit, Fit, FitOutcome, Poly, RunsFitOutcome,
    SearchedBounds, SeriesTerms, Transform,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// f(1..=45), the published reference values for the counting sequence.
const KNOWN_45: [&str; 45] = [
    "1",
    "1",
    "3",
    "11",
    "49",
    "263",
    "1653",
    "11877",
    "95991",
    "862047",
    "8516221",
    "91782159",
    "1071601285",
    "13473914281",
    "181517350571",
    "2608383775171",
    "39824825088809",
    "643813226048935",
    "10986188094959045",
    "197337931571468445",
    "3721889002400665951",
    "73539326922210382215",
    "1519081379788242418149",
    "32743555520207058219615",
    "735189675389014372317381",
    "17167470189102029106503457",
    "416297325393961581614919699",
    "10468759109047048511785181499",
    "272663345523662949571086535201",
    "7346518362495550669587951987399",
    "204539324291355079758576427320853",
    "5878416448467628215599958670190869",
    "174223945386975482728912851110751431",
    "5320106374135453888563313157982976111",
    "167232974698164950641578719412434688845",
    "5407019929661274797886581276653666104943",
    "179677314965899717327756420597568210468933",
    "6132116544121046402686046213590718114272089",
    "214787281796488809444762543177377466419782267",
    "7716175695131570964771559074490172330993576115",
    "284131588386675257705011846785657928372695002841",
    "10717718945463416620327720805595647805635809236711",
    "413908527884993695909526722330319436067536797304549",
    "16356508568742954048255540186930772843919017766669517",
    "661053598808034620660440013405109251647269697650963759",
];

/// Reference decimal expansions for the singularity structure of the EGF
/// and the growth constants of the counting sequence.
const SING_1: &str =
    "1.113439041736727043761661526918083240141390165833449466152700785053219911270";
const SING_2: &str =
    "2.417184228722564007388473547672885752580057534770845001690528350200102151036";
const SING_3: &str =
    "3.076673197412146436807595671137309181422151285506943038305240180949212077913";
const PAIR_RE: &str =
    "0.4279380975440727242991591373540946029637854497521857134254777354059489934";
const PAIR_IM: &str =
    "3.6012595134274782137294551323567899146878282109407492350988015900552787045";
const MU_INV: &str = "0.8981183185746869695116759646856448";
const GROWTH_C: &str = "0.6956885490706357679957031687241101565741983507216179232324";

fn pass(criterion: usize, detail: &str) {
    println!("criterion {criterion}: PASS - {detail}");
}

// ---------------------------------------------------------------- shared --

fn seq300() -> &'static [BigInt] {
    static SEQ: OnceLock<Vec<BigInt>> = OnceLock::new();
    SEQ.get_or_init(|| count_sequence(&BigIntRing, 300))
}

fn runs_300x10() -> &'static CountMatrix<BigInt> {
    static RUNS: OnceLock<CountMatrix<BigInt>> = OnceLock::new();
    RUNS.get_or_init(|| count_by_runs(&BigIntRing, 300, 10).expect("1 <= k_max <= n_max"))
}

struct ModularRuns {
    w1: Vec<u8>,
    w1_elapsed: Duration,
    w4: Vec<u8>,
    w4_elapsed: Duration,
}

/// `count --max-n 300 --backend modular` under a 4 GiB address-space cap,
/// once per worker count. Success under the cap bounds peak memory, since
/// address space dominates resident size.
fn modular_runs() -> &'static ModularRuns {
    static RUNS: OnceLock<ModularRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let (w1, w1_elapsed) = run_capped(1);
        let (w4, w4_elapsed) = run_capped(4);
        ModularRuns { w1, w1_elapsed, w4, w4_elapsed }
    })
}

fn run_capped(workers: usize) -> (Vec<u8>, Duration) {
    let start = Instant::now();
    let out = Command::new("sh")
        .arg("-c")
        .arg(r#"ulimit -v 4194304; exec "$0" "$@""#)
        .arg(env!("CARGO_BIN_EXE_popstack"))
        .args(["count", "--max-n", "300", "--backend", "modular", "--workers"])
        .arg(workers.to_string())
        .output()
        .expect("shell runs");
    let elapsed = start.elapsed();
    assert!(
        out.status.success(),
        "modular count with {workers} workers failed under the 4 GiB cap: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    (out.stdout, elapsed)
}

fn bfile_text(values: &[BigInt]) -> String {
    values.iter().enumerate().map(|(i, v)| format!("{} {v}\n", i + 1)).collect()
}

// ------------------------------------------------------------- criteria --

#[test]
fn criterion_1_table_regression_both_backends() {
    let expected: String =
        KNOWN_45.iter().enumerate().map(|(i, v)| format!("{} {v}\n", i + 1)).collect();
    let mut timings = Vec::new();
    for backend in ["bigint", "modular"] {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_popstack"))
            .args(["count", "--max-n", "45", "--backend", backend])
            .output()
            .expect("binary runs");
        let elapsed = start.elapsed();
        assert!(out.status.success(), "{backend} backend failed");
        assert_eq!(
            String::from_utf8(out.stdout).expect("utf-8"),
            expected,
            "{backend} output is not byte-identical to the reference table"
        );
        assert!(elapsed < Duration::from_secs(5), "{backend} took {elapsed:?}, budget 5 s");
        timings.push(format!("{backend} {elapsed:?}"));
    }
    pass(1, &format!("45 values byte-exact on both backends ({})", timings.join(", ")));
}

#[test]
fn criterion_2_brute_force_oracle_agreement() {
    let totals = count_sequence(&BigIntRing, 10);
    assert_eq!(totals[9], BigInt::from(862047u32));
    for n in 1..=10usize {
        let brute = brute_count(n).expect("n <= 12");
        assert_eq!(BigInt::from(brute.total), totals[n - 1], "total mismatch at n = {n}");
    }
    let matrix = count_by_runs(&BigIntRing, 9, 9).expect("k_max <= n_max");
    for n in 1..=9usize {
        let brute = brute_count(n).expect("n <= 12");
        for k in 1..=9usize {
            let dp = matrix.get(n, k).cloned().unwrap_or_default();
            let exhaustive = BigInt::from(brute.by_runs.get(&k).copied().unwrap_or(0));
            assert_eq!(dp, exhaustive, "by-runs mismatch at n = {n}, k = {k}");
        }
    }
    pass(2, "totals equal exhaustive counts for n <= 10, by-runs counts for n <= 9");
}

#[test]
fn criterion_3_slow_recurrence_cross_check() {
    let slow = count_slow_reference(&BigIntRing, 40).expect("within the reference guard");
    assert_eq!(slow, count_sequence(&BigIntRing, 40), "big-integer disagreement");
    let primes = [2147483647u64, 1000000007, 998244353];
    for &p in &primes {
        let ring = FpRing::new(p);
        let slow = count_slow_reference(&ring, 40).expect("within the reference guard");
        assert_eq!(slow, count_sequence(&ring, 40), "disagreement mod {p}");
    }
    pass(3, "literal and prefix-sum recurrences agree to N = 40 over Z and 3 prime fields");
}

#[test]
fn criterion_4_modular_scale_and_row_sums() {
    let runs = modular_runs();
    assert!(
        runs.w1_elapsed < Duration::from_secs(900),
        "1 worker took {:?}, budget 15 min",
        runs.w1_elapsed
    );
    assert!(
        runs.w4_elapsed < Duration::from_secs(300),
        "4 workers took {:?}, budget 5 min",
        runs.w4_elapsed
    );
    assert_eq!(
        String::from_utf8(runs.w1.clone()).expect("utf-8"),
        bfile_text(seq300()),
        "modular CLI output disagrees with the big-integer library sequence"
    );

    let matrix = count_by_runs(&BigIntRing, 100, 100).expect("k_max <= n_max");
    for n in 1..=100usize {
        let mut row_sum = BigInt::zero();
        for (_, v) in matrix.row(n) {
            row_sum += v;
        }
        assert_eq!(row_sum, seq300()[n - 1], "row-sum identity fails at n = {n}");
    }
    pass(
        4,
        &format!(
            "n = 300 modular in {:?} (1 worker) / {:?} (4 workers) under a 4 GiB cap; \
             row sums match totals to n = 100",
            runs.w1_elapsed, runs.w4_elapsed
        ),
    );
}

#[test]
fn criterion_5_exact_fit_recovery() {
    let two_runs = SeriesTerms::counting_sequence(&runs_300x10().column(2)[..30]);
    let FitOutcome::Fit(f2) = fit_rational(&two_runs, 30, 8).expect("search runs") else {
        panic!("no rational fit found for the 2-run column");
    };
    let display = f2.to_string();
    let lines: Vec<&str> = display.lines().collect();
    assert_eq!(lines[1], "numerator: 0 0 0 2");
    assert_eq!(lines[2], "denominator: 1 -4 5 -2");

    let four_runs = SeriesTerms::counting_sequence(&runs_300x10().column(4)[..60]);
    let FitOutcome::Fit(f4) = fit_rational(&four_runs, 30, 8).expect("search runs") else {
        panic!("no rational fit found for the 4-run column");
    };
    let display = f4.to_string();
    let lines: Vec<&str> = display.lines().collect();
    assert_eq!(lines[1], "numerator: 0 0 0 0 0 0 42 -148 10 360 -288");
    assert_eq!(
        lines[2],
        "denominator: 1 -20 175 -882 2835 -6072 8777 -8458 5204 -1848 288"
    );
    pass(5, "2-run and 4-run columns recover their exact rational forms, canonical strings");
}

#[test]
fn criterion_6_denominator_family_conjecture() {
    let reports = fit_runs_family(runs_300x10(), 2..=10, 60);
    assert_eq!(reports.len(), 9);
    for report in &reports {
        let k = report.k;
        let RunsFitOutcome::Fit { fit, .. } = &report.outcome else {
            panic!("k = {k}: expected a fit, got {}", report);
        };
        assert!(report.conforms(), "k = {k}: fit does not conform:\n{report}");
        assert_eq!(fit.denominator(), &expected_denominator(k), "k = {k} denominator");
        assert_eq!(fit.numerator().degree(), Some(k * (k + 1) / 2), "k = {k} numerator degree");
    }

    // A plausible transcription error swaps (1-x)^3 for (1-3x)^3 in the
    // k = 3 denominator; the fitted denominator must reject that variant.
    let k3 = reports.iter().find(|r| r.k == 3).expect("k = 3 present");
    let RunsFitOutcome::Fit { fit, .. } = &k3.outcome else { unreachable!() };
    let variant = &(&Poly::from_i64(&[1, -3]) * &Poly::from_i64(&[1, -2]).pow(2))
        * &Poly::from_i64(&[1, -3]).pow(3);
    assert_ne!(fit.denominator(), &variant, "k = 3 fit should contradict the variant");
    assert_eq!(fit.denominator(), &expected_denominator(3));
    pass(
        6,
        "k = 2..10 denominators match prod (1-ix)^(k-i+1) with numerator degree k(k+1)/2; \
         k = 3 rejects the (1-3x)^3 variant",
    );
}

#[test]
fn criterion_7_negative_certificates_at_scale() {
    let terms = SeriesTerms::counting_sequence(seq300());
    let independent_prime = 1_000_000_007u64;

    let FitOutcome::Negative(cert) = fit_rational(&terms, 140, 20).expect("search runs") else {
        panic!("unexpected rational fit on the main sequence");
    };
    assert!(matches!(cert.bounds, SearchedBounds::Rational { d_searched: 140 }));
    assert_ne!(cert.presolve_prime, independent_prime);
    assert!(
        recheck_negative(&cert, &terms, independent_prime).expect("recheck runs"),
        "rational frontier system gained a nontrivial kernel under an independent prime"
    );

    let FitOutcome::Negative(cert) = fit_algebraic(&terms, 279, 279, 20).expect("search runs")
    else {
        panic!("unexpected algebraic fit on the main sequence");
    };
    let SearchedBounds::Algebraic { product_cap, .. } = &cert.bounds else {
        panic!("wrong bounds family");
    };
    assert!(*product_cap >= 280, "searched (m+1)(d+1) cap {product_cap} < 280");
    assert!(recheck_negative(&cert, &terms, independent_prime).expect("recheck runs"));

    let FitOutcome::Negative(cert) = fit_dfinite(&terms, 279, 279, 20).expect("search runs")
    else {
        panic!("unexpected D-finite fit on the main sequence");
    };
    let SearchedBounds::DFinite { product_cap, .. } = &cert.bounds else {
        panic!("wrong bounds family");
    };
    assert!(*product_cap >= 280, "searched (k+2)(d+1) cap {product_cap} < 280");
    assert!(recheck_negative(&cert, &terms, independent_prime).expect("recheck runs"));

    pass(
        7,
        "no rational (d <= 140), algebraic, or D-finite fit within the caps; \
         all three frontiers re-verified mod 1000000007",
    );
}

#[test]
fn criterion_8_singularity_structure_and_growth() {
    let counting = SeriesTerms::counting_sequence(seq300());
    let egf = transform_series(&counting, Transform::Egf).expect("factorials divide cleanly");
    let grid = default_grid(&egf);
    let estimates = analyze(&egf, &grid).expect("grid analysis runs");

    let positive_real = |e: &&SingularityEstimate| {
        e.location.im.to_f64().abs() < 1e-6
            && !e.location.re.is_negative()
            && !e.location.re.is_zero()
    };
    let dominant = estimates
        .iter()
        .filter(|e| e.contributors.len() >= 3)
        .find(positive_real)
        .expect("a well-supported positive real dominant singularity");
    let d1 = digits_vs(&dominant.location.re, SING_1);
    assert!(d1 >= 10, "dominant singularity agrees to {d1} digits, need 10");
    let theta = dominant.exponent.as_ref().expect("simple root carries an exponent").to_f64();
    assert!((theta + 1.0).abs() <= 0.01, "exponent {theta} is not within -1 +- 0.01");

    let d2 = digits_vs(&nearest_real(&estimates, SING_2).location.re, SING_2);
    assert!(d2 >= 4, "second singularity agrees to {d2} digits, need 4");
    let d3 = digits_vs(&nearest_real(&estimates, SING_3).location.re, SING_3);
    assert!(d3 >= 3, "third singularity agrees to {d3} digits, need 3");

    let pair_re: f64 = PAIR_RE.parse().expect("decimal literal");
    let pair_im: f64 = PAIR_IM.parse().expect("decimal literal");
    let pair = estimates
        .iter()
        .filter(|e| e.location.im.to_f64().abs() > 0.5)
        .min_by(|a, b| {
            let d = |e: &SingularityEstimate| {
                (e.location.re.to_f64() - pair_re).hypot(e.location.im.to_f64().abs() - pair_im)
            };
            d(a).total_cmp(&d(b))
        })
        .expect("a complex conjugate pair in the estimate list");
    let bits = pair.location.bits();
    let im_ref = if pair.location.im.is_negative() {
        format!("-{PAIR_IM}")
    } else {
        PAIR_IM.to_string()
    };
    let pair_ref =
        CFixed::new(fixed_from_decimal(PAIR_RE, bits), fixed_from_decimal(&im_ref, bits));
    let dp = agreed_digits_complex(&pair.location, &pair_ref);
    assert!(dp >= 3, "complex pair agrees to {dp} digits, need 3");

    let growth = growth_constants(&counting, &dominant.location.re).expect("mu > 0");
    let dmu = digits_vs(&growth.mu_inv, MU_INV);
    assert!(dmu >= 8, "mu_inv agrees to {dmu} digits, need 8");
    let dc = digits_vs(&growth.c, GROWTH_C);
    assert!(dc >= 6, "C agrees to {dc} digits, need 6");

    pass(
        8,
        &format!(
            "dominant {d1} digits (exponent {theta:.4}), second {d2}, third {d3}, \
             pair {dp}; mu_inv {dmu} digits, C {dc} digits"
        ),
    );
}

#[test]
fn criterion_9_property_suites() {
    // CRT round-trip: 1000 seeded-random integers below the modulus product.
    let basis = select_primes(60, DEFAULT_PRIME_CEILING).expect("pool suffices for 60!");
    let product = basis.modulus_product();
    let mut rng = ChaCha8Rng::seed_from_u64(20260815);
    let byte_len = (product.bits() as usize) / 8 + 9;
    let values: Vec<BigInt> = (0..1000)
        .map(|_| {
            let mut buf = vec![0u8; byte_len];
            rng.fill_bytes(&mut buf);
            BigInt::from_bytes_le(Sign::Plus, &buf) % product
        })
        .collect();
    let bundles: Vec<ResidueBundle> = basis
        .primes()
        .iter()
        .map(|&p| {
            let residues: Vec<u64> = values
                .iter()
                .map(|v| (v % BigInt::from(p)).to_u64().expect("residue fits"))
                .collect();
            ResidueBundle::new(p, residues).expect("residues reduced")
        })
        .collect();
    let reconstructed = crt_reconstruct(&bundles, &basis).expect("bundles cover the basis");
    assert_eq!(reconstructed, values, "CRT round-trip failed");

    // Fit verification round-trip: expand the fitted rational and compare
    // every input term.
    let four_runs = SeriesTerms::counting_sequence(&runs_300x10().column(4)[..60]);
    let FitOutcome::Fit(f4) = fit_rational(&four_runs, 30, 8).expect("search runs") else {
        panic!("no rational fit found for the 4-run column");
    };
    assert_eq!(f4.expand(four_runs.len()), four_runs.coeffs(), "expansion differs");
    assert!(verify_fit(&Fit::from(f4), &four_runs));

    // Constructed exponents: singularity location and exponent of
    // (1 - lambda x)^gamma recovered within 1e-6.
    for (gamma, lambda) in [(-2, 1), (-1, 2), (1, 2), (-3, 2), (1, 3)] {
        let gamma = BigRational::new(BigInt::from(gamma), BigInt::from(2));
        let lambda = BigRational::new(BigInt::from(lambda), BigInt::one());
        check_constructed_exponent(&gamma, &lambda);
    }

    // Worker-count invariance of the modular backend's CLI output.
    let runs = modular_runs();
    assert_eq!(runs.w1, runs.w4, "modular output depends on the worker count");

    pass(
        9,
        "CRT round-trip on 1000 integers, fit expansion round-trip, five constructed \
         exponents within 1e-6, and worker-count invariance",
    );
}

// -------------------------------------------------------------- helpers --

/// Terms of (1 - lambda x)^gamma.
fn binomial_series(gamma: &BigRational, lambda: &BigRational, len: usize) -> SeriesTerms {
    let mut coeffs = Vec::with_capacity(len);
    let mut b = BigRational::one();
    let neg_lambda = -lambda.clone();
    for n in 0..len {
        coeffs.push(b.clone());
        let nq = BigRational::from_integer(BigInt::from(n));
        let step = (gamma - &nq) / (&nq + BigRational::one());
        b = b * step * &neg_lambda;
    }
    SeriesTerms::new(coeffs)
}

fn check_constructed_exponent(gamma: &BigRational, lambda: &BigRational) {
    let terms = binomial_series(gamma, lambda, 61);
    let estimates = analyze(&terms, &default_grid(&terms)).expect("grid analysis runs");
    let target = lambda.recip().to_f64().expect("small rational");
    let est = estimates
        .iter()
        .min_by(|a, b| {
            let da = (a.location.re.to_f64() - target).abs();
            let db = (b.location.re.to_f64() - target).abs();
            da.total_cmp(&db)
        })
        .expect("nonempty estimate list");
    let loc_err = (est.location.re.to_f64() - target).abs().max(est.location.im.to_f64().abs());
    assert!(loc_err < 1e-6, "gamma {gamma}, lambda {lambda}: location off by {loc_err:.2e}");
    let theta = est.exponent.as_ref().expect("simple root carries an exponent").to_f64();
    let gamma_f = gamma.to_f64().expect("small rational");
    assert!(
        (theta - gamma_f).abs() < 1e-6,
        "gamma {gamma}, lambda {lambda}: exponent {theta} off by {:.2e}",
        (theta - gamma_f).abs()
    );
}

/// Builds the reference value from its decimal expansion at the given
/// precision.
fn fixed_from_decimal(s: &str, bits: u32) -> Fixed {
    let (sign, t) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().expect("decimal digits");
    let mut den = BigInt::one();
    for _ in 0..frac_part.len() {
        den *= 10;
    }
    Fixed::from_ratio(&(num * sign), &den, bits)
}

fn digits_vs(estimate: &Fixed, reference: &str) -> usize {
    agreed_digits(estimate, &fixed_from_decimal(reference, estimate.bits()))
}

/// The positive-real estimate closest to the reference location.
fn nearest_real<'a>(
    estimates: &'a [SingularityEstimate],
    reference: &str,
) -> &'a SingularityEstimate {
    let target: f64 = reference.parse().expect("decimal literal");
    estimates
        .iter()
        .filter(|e| e.location.im.to_f64().abs() < 1e-6 && !e.location.re.is_negative())
        .min_by(|a, b| {
            let da = (a.location.re.to_f64() - target).abs();
            let db = (b.location.re.to_f64() - target).abs();
            da.total_cmp(&db)
        })
        .expect("a positive real estimate")
}
