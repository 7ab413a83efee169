//! Brute-force enumeration oracle for small n.

use std::collections::BTreeMap;

use crate::perm::{decompose_runs, is_pop_stacked, Direction, Permutation};
use crate::CoreError;

/// Largest n accepted by [`brute_count`]; 12! is about 4.8e8 permutations.
pub const BRUTE_MAX_N: usize = 12;

/// Counts from exhaustive enumeration: the number of pop-stacked
/// permutations of [n] in total and keyed by ascending-run count.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BruteCountReport {
    pub n: usize,
    pub total: u64,
    pub by_runs: BTreeMap<usize, u64>,
}

/// Advances a permutation to its lexicographic successor in place.
/// Returns false, leaving the input untouched, when it is already the
/// lexicographically last (fully descending) permutation.
pub fn next_permutation(perm: &mut Permutation) -> bool {
    // Rebuild through the validated constructor to keep Permutation's
    // invariant encapsulated; cost is irrelevant next to the filter.
    let mut v = perm.values().to_vec();
    let n = v.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    *perm = Permutation::from_one_line(v).unwrap();
    true
}

/// Enumerates all permutations of [n] in lexicographic order and tallies
/// those passing [`is_pop_stacked`], keyed by ascending-run count.
///
/// The empty permutation is pop-stacked by convention and has zero runs.
pub fn brute_count(n: usize) -> Result<BruteCountReport, CoreError> {
    if n > BRUTE_MAX_N {
        return Err(CoreError::BruteGuard { n, max: BRUTE_MAX_N });
    }
    let mut total = 0u64;
    let mut by_runs = BTreeMap::new();
    let mut perm = Permutation::identity(n);
    loop {
        if is_pop_stacked(&perm) {
            total += 1;
            let k = decompose_runs(&perm, Direction::Ascending).run_count();
            *by_runs.entry(k).or_insert(0) += 1;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(BruteCountReport { n, total, by_runs })
}
