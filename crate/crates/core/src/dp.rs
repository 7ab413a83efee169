//! Counting recurrences indexed by the final block's minimum and maximum.
//!
//! Pop-stacked permutations of [n] are in bijection with overlapping
//! ballots. Let f_{c,d}(n) count overlapping ballots of [n] whose last
//! block has minimum c and maximum d. Classifying by how the last block
//! meets the rest gives
//!
//! ```text
//! f_{c,d}(n) = [c=1 and d=n]
//!            + [c=d]  Σ_{a=1}^{c-1} Σ_{b=c}^{n} f_{a,b}(n-1)
//!            + [c<d]  Σ_{ℓ=0}^{d-c-1} C(d-c-1, ℓ) Σ_{a=1}^{d-ℓ-2} Σ_{b=c}^{n-ℓ-2} f_{a,b}(n-ℓ-2)
//! ```
//!
//! with f_{c,d}(n) = 0 for c > d, and f(n) = Σ_{a≤b} f_{a,b}(n). (In the
//! c = d branch the upper limit b = n is vacuous, since a ballot of [n-1]
//! has block maxima at most n-1; the tables treat such reads as zero.)
//!
//! [`count_slow_reference`] renders the sums literally, which is O(n^6)-ish
//! and guarded to small n. The production path maintains rectangular prefix
//! sums g_{c,d}(n) = Σ_{a≤c} Σ_{b≤d} f_{a,b}(n), so each double sum becomes
//! a difference of two table reads and a full run costs O(N^4) time and
//! O(N^3) ring elements ([`prefix_table`], [`count_sequence`]).
//!
//! Refining by the number of blocks k (equivalently, ascending runs of the
//! permutation) reuses the same recurrence with k-1 on the right-hand side
//! and the base case [c=1 and d=n and k=1]; [`count_by_runs`] walks k
//! outermost and keeps only two adjacent k-slices of prefix tensors alive.

use crate::ring::{BinomialTable, Ring};
use crate::CoreError;

/// Largest n accepted by the literal reference recurrence.
pub const SLOW_REFERENCE_MAX_N: usize = 60;

/// Prefix sums g_{c,d}(n) of one recurrence slice, all levels n retained
/// (the ℓ-sum reaches arbitrarily far back, so no level can be dropped).
///
/// Level n is a dense n×n block in row-major (c, d) order. Reads with
/// c = 0 or d = 0 yield zero; 1 ≤ c, d ≤ n otherwise.
pub struct PrefixTable<R: Ring> {
    levels: Vec<Vec<R::Elem>>,
    zero: R::Elem,
}

impl<R: Ring> PrefixTable<R> {
    fn empty(ring: &R) -> Self {
        PrefixTable {
            levels: Vec::new(),
            zero: ring.zero(),
        }
    }

    /// Number of completed levels.
    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    /// g_{c,d}(n) = Σ_{a≤c} Σ_{b≤d} f_{a,b}(n).
    pub fn g(&self, n: usize, c: usize, d: usize) -> &R::Elem {
        if c == 0 || d == 0 {
            return &self.zero;
        }
        debug_assert!(n >= 1 && n <= self.levels.len() && c <= n && d <= n);
        &self.levels[n - 1][(c - 1) * n + (d - 1)]
    }

    /// f(n) for this slice: the full prefix sum g_{n,n}(n).
    pub fn total(&self, n: usize) -> &R::Elem {
        self.g(n, n, n)
    }

    /// Retained ring elements; the O(N^3) memory claim made measurable.
    pub fn cell_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Ring elements a table with n_max levels retains: Σ n^2.
pub fn predicted_cells(n_max: usize) -> usize {
    n_max * (n_max + 1) * (2 * n_max + 1) / 6
}

/// Builds level n of a slice from `source` (the same table for the plain
/// count; the previous k-slice for by-run counts). `include_singleton`
/// injects the [c=1 and d=n] base case, which belongs to k = 1 only.
fn build_level<R: Ring>(
    ring: &R,
    binom_cols: &[Vec<R::Elem>],
    source: &PrefixTable<R>,
    n: usize,
    include_singleton: bool,
) -> Vec<R::Elem> {
    // acc[(d-1)*n + (c-1)] accumulates the ℓ-branch of f_{c,d}(n). The
    // ℓ-outer order keeps every read of this pass inside one older level.
    let mut acc: Vec<R::Acc> = (0..n * n).map(|_| ring.acc_zero()).collect();
    for l in 0..n.saturating_sub(2) {
        let m = n - 2 - l; // level the ℓ-term reads; m >= 1 here
        let wcol = &binom_cols[l]; // wcol[j] = C(j, l)
        for d in (l + 3)..=n {
            let u = d - 2 - l; // 1 <= u <= m
            let row = {
                let lvl = &source.levels[m - 1];
                &lvl[(u - 1) * m..u * m]
            };
            let hi = row[m - 1].clone(); // g_{u,m}(m): the b-sum saturates at the level
            let cmax = d - l - 1; // c <= d-ℓ-1 keeps ℓ <= d-c-1
            let base = (d - 1) * n;
            // c = 1 reads g_{u,0} = 0.
            ring.acc_weighted_diff(&mut acc[base], &wcol[d - 2], &hi, &source.zero);
            // c = 2..=cmax, zipped so the weight runs wcol[d-1-c] descending
            // and the low prefix runs row[c-2] ascending.
            let cells = acc[base + 1..base + cmax].iter_mut();
            let weights = wcol[l..d - 2].iter().rev();
            for ((cell, lo), w) in cells.zip(&row[..cmax - 1]).zip(weights) {
                ring.acc_weighted_diff(cell, w, &hi, lo);
            }
        }
    }

    let mut level = vec![ring.zero(); n * n];
    for c in 1..=n {
        for d in 1..=n {
            let mut f = if c < d {
                let cell = std::mem::replace(&mut acc[(d - 1) * n + (c - 1)], ring.acc_zero());
                ring.acc_finish(cell)
            } else if c == d && n >= 2 {
                // Σ_{a<c} Σ_{b>=c} f_{a,b}(n-1) as a rectangle at level n-1
                // (b saturates at n-1; the b = n summand is identically 0).
                ring.sub(source.g(n - 1, c - 1, n - 1), source.g(n - 1, c - 1, c - 1))
            } else {
                ring.zero()
            };
            if include_singleton && c == 1 && d == n {
                f = ring.add(&f, &ring.one());
            }
            let mut gval = f;
            if c > 1 {
                gval = ring.add(&gval, &level[(c - 2) * n + (d - 1)]);
            }
            if d > 1 {
                gval = ring.add(&gval, &level[(c - 1) * n + (d - 2)]);
            }
            if c > 1 && d > 1 {
                gval = ring.sub(&gval, &level[(c - 2) * n + (d - 2)]);
            }
            level[(c - 1) * n + (d - 1)] = gval;
        }
    }
    level
}

fn binom_columns<R: Ring>(ring: &R, n_max: usize) -> Vec<Vec<R::Elem>> {
    let binom = BinomialTable::new(ring, n_max);
    // ℓ ranges over 0..=n_max-3; column ℓ is read at indices up to n_max-2.
    (0..n_max.saturating_sub(2))
        .map(|l| binom.column(ring, l))
        .collect()
}

/// The full prefix-sum tensor for the plain (all block counts) recurrence.
pub fn prefix_table<R: Ring>(ring: &R, n_max: usize) -> PrefixTable<R> {
    let binom_cols = binom_columns(ring, n_max);
    let mut table = PrefixTable::empty(ring);
    for n in 1..=n_max {
        let level = build_level(ring, &binom_cols, &table, n, true);
        table.levels.push(level);
    }
    table
}

/// f(1), ..., f(n_max): pop-stacked permutations of each length.
/// n_max = 0 yields an empty sequence.
pub fn count_sequence<R: Ring>(ring: &R, n_max: usize) -> Vec<R::Elem> {
    let table = prefix_table(ring, n_max);
    (1..=n_max).map(|n| table.total(n).clone()).collect()
}

/// Counts refined by block count: cols[k-1][n-1] = f(n, k), the number of
/// pop-stacked permutations of [n] with exactly k ascending runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountMatrix<E> {
    n_max: usize,
    cols: Vec<Vec<E>>,
}

impl<E> CountMatrix<E> {
    pub fn from_columns(n_max: usize, cols: Vec<Vec<E>>) -> Self {
        assert!(cols.iter().all(|c| c.len() == n_max));
        CountMatrix { n_max, cols }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.cols.len()
    }

    /// f(n, k); zero cells outside the stored range are None.
    pub fn get(&self, n: usize, k: usize) -> Option<&E> {
        if n == 0 || n > self.n_max || k == 0 || k > self.cols.len() {
            None
        } else {
            Some(&self.cols[k - 1][n - 1])
        }
    }

    /// The sequence f(1..=n_max, k) for one block count k.
    pub fn column(&self, k: usize) -> &[E] {
        &self.cols[k - 1]
    }

    /// (k, f(n, k)) across stored k for one n.
    pub fn row(&self, n: usize) -> impl Iterator<Item = (usize, &E)> {
        assert!(n >= 1 && n <= self.n_max);
        self.cols.iter().enumerate().map(move |(i, col)| (i + 1, &col[n - 1]))
    }
}

/// Streams the by-block-count slices k = 1..=k_max in order, calling
/// `sink(k, column)` with f(1..=n_max, k) as soon as slice k completes.
/// Only the current and previous prefix tensors are held, so memory stays
/// at two tables regardless of k_max.
pub fn count_by_runs_streaming<R: Ring>(
    ring: &R,
    n_max: usize,
    k_max: usize,
    mut sink: impl FnMut(usize, Vec<R::Elem>),
) -> Result<(), CoreError> {
    if n_max == 0 && k_max == 0 {
        return Ok(());
    }
    if k_max == 0 || k_max > n_max {
        return Err(CoreError::BadRunBound { k_max, n_max });
    }
    let binom_cols = binom_columns(ring, n_max);

    // k = 1: one ballot per n (the single-block one, min 1 and max n), so
    // f_{c,d}(n,1) = [c=1 and d=n] and its prefix sum is [d = n].
    let mut prev = PrefixTable::empty(ring);
    for n in 1..=n_max {
        let mut level = vec![ring.zero(); n * n];
        for c in 1..=n {
            level[(c - 1) * n + (n - 1)] = ring.one();
        }
        prev.levels.push(level);
    }
    sink(1, (1..=n_max).map(|n| prev.total(n).clone()).collect());

    for k in 2..=k_max {
        let mut cur = PrefixTable::empty(ring);
        for n in 1..=n_max {
            let level = build_level(ring, &binom_cols, &prev, n, false);
            cur.levels.push(level);
        }
        sink(k, (1..=n_max).map(|n| cur.total(n).clone()).collect());
        prev = cur;
    }
    Ok(())
}

/// Collects [`count_by_runs_streaming`] into a matrix.
pub fn count_by_runs<R: Ring>(
    ring: &R,
    n_max: usize,
    k_max: usize,
) -> Result<CountMatrix<R::Elem>, CoreError> {
    let mut cols = Vec::with_capacity(k_max);
    count_by_runs_streaming(ring, n_max, k_max, |_, col| cols.push(col))?;
    Ok(CountMatrix { n_max, cols })
}

/// The f_{c,d}(n) tables of the literal recurrence, one n×n block per
/// level in row-major (c, d) order. Exposed for cross-validation against
/// the prefix-sum path.
pub fn slow_f_levels<R: Ring>(ring: &R, n_max: usize) -> Result<Vec<Vec<R::Elem>>, CoreError> {
    if n_max > SLOW_REFERENCE_MAX_N {
        return Err(CoreError::SlowReferenceGuard {
            n: n_max,
            max: SLOW_REFERENCE_MAX_N,
        });
    }
    let binom = BinomialTable::new(ring, n_max);
    let mut flevels: Vec<Vec<R::Elem>> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        // Reads outside 1 <= a, b <= m are zero, which also absorbs the
        // vacuous b = n upper limit in the c = d branch below.
        let fval = |levels: &[Vec<R::Elem>], m: usize, a: usize, b: usize| -> R::Elem {
            if m == 0 || a == 0 || b == 0 || a > m || b > m {
                ring.zero()
            } else {
                levels[m - 1][(a - 1) * m + (b - 1)].clone()
            }
        };
        let mut level = vec![ring.zero(); n * n];
        for c in 1..=n {
            for d in c..=n {
                let mut f = ring.zero();
                if c == 1 && d == n {
                    f = ring.add(&f, &ring.one());
                }
                if c == d && n >= 2 {
                    for a in 1..c {
                        for b in c..=n {
                            f = ring.add(&f, &fval(&flevels, n - 1, a, b));
                        }
                    }
                }
                if c < d {
                    for l in 0..=(d - c - 1) {
                        if n < l + 3 {
                            continue; // the referenced level n-ℓ-2 is empty
                        }
                        let m = n - l - 2;
                        let w = binom.get(ring, d - c - 1, l);
                        let mut inner = ring.zero();
                        for a in 1..=(d.saturating_sub(l + 2)) {
                            for b in c..=m {
                                inner = ring.add(&inner, &fval(&flevels, m, a, b));
                            }
                        }
                        f = ring.add(&f, &ring.mul(&w, &inner));
                    }
                }
                level[(c - 1) * n + (d - 1)] = f;
            }
        }
        flevels.push(level);
    }
    Ok(flevels)
}

/// f(1..=n_max) by the literal recurrence; O(N^6)-ish, for validation only.
pub fn count_slow_reference<R: Ring>(ring: &R, n_max: usize) -> Result<Vec<R::Elem>, CoreError> {
    let flevels = slow_f_levels(ring, n_max)?;
    Ok(flevels
        .iter()
        .enumerate()
        .map(|(idx, level)| {
            let n = idx + 1;
            let mut sum = ring.zero();
            for a in 1..=n {
                for b in a..=n {
                    sum = ring.add(&sum, &level[(a - 1) * n + (b - 1)]);
                }
            }
            sum
        })
        .collect())
}
