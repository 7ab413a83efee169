//! Permutations, maximal runs, and the pop-stack pass operator.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::CoreError;

/// A permutation of {1, ..., n} in one-line notation. n = 0 is allowed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    values: Vec<u32>,
}

impl Permutation {
    /// Builds a permutation from one-line notation, checking that the values
    /// are exactly 1..=n in some order.
    pub fn from_one_line(values: Vec<u32>) -> Result<Self, CoreError> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            let ok = v >= 1 && (v as usize) <= n && !seen[v as usize - 1];
            if !ok {
                return Err(CoreError::NotAPermutation { value: v, len: n });
            }
            seen[v as usize - 1] = true;
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().enumerate().all(|(i, &v)| v as usize == i + 1)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Parses either comma/space separated values ("6,1,7") or, as a shorthand
/// usable when n <= 9, a run of single digits ("617").
impl FromStr for Permutation {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = || CoreError::PermutationParse { input: s.to_string() };
        let s = s.trim();
        if s.is_empty() {
            return Ok(Permutation::identity(0));
        }
        let values: Vec<u32> = if s.contains([',', ' ']) {
            s.split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>().map_err(|_| parse_err()))
                .collect::<Result<_, _>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).ok_or_else(parse_err))
                .collect::<Result<_, _>>()?
        };
        Permutation::from_one_line(values).map_err(|_| parse_err())
    }
}

/// Orientation of a run decomposition.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Ascending,
    Descending,
}

/// A factorization of a permutation into maximal runs, stored as index
/// ranges into the one-line form. Empty permutations have no runs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RunDecomposition {
    direction: Direction,
    runs: Vec<Range<usize>>,
}

impl RunDecomposition {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn runs(&self) -> &[Range<usize>] {
        &self.runs
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }
}

/// Splits a permutation into maximal ascending or descending runs.
pub fn decompose_runs(perm: &Permutation, direction: Direction) -> RunDecomposition {
    let v = perm.values();
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..v.len() {
        let continues = match direction {
            Direction::Ascending => v[i - 1] < v[i],
            Direction::Descending => v[i - 1] > v[i],
        };
        if !continues {
            runs.push(start..i);
            start = i;
        }
    }
    if !v.is_empty() {
        runs.push(start..v.len());
    }
    RunDecomposition { direction, runs }
}

/// One pop-stack pass: reverse every maximal descending run in place.
pub fn pop_stack(perm: &Permutation) -> Permutation {
    let mut values = perm.values().to_vec();
    for run in decompose_runs(perm, Direction::Descending).runs() {
        values[run.clone()].reverse();
    }
    Permutation { values }
}

/// Whether k passes sort the permutation. The identity is sortable with
/// k = 0; a pass fixes the identity, so early convergence is permanent.
pub fn is_sortable_k(perm: &Permutation, k: usize) -> bool {
    let mut current = perm.clone();
    for _ in 0..k {
        if current.is_identity() {
            return true;
        }
        current = pop_stack(&current);
    }
    current.is_identity()
}

/// Whether the permutation is the image of some permutation under one pass.
///
/// Writing R_1, ..., R_m for the maximal ascending runs, this holds exactly
/// when min(R_i) < max(R_{i+1}) for every adjacent pair. In an ascending run
/// the first entry is the minimum and the last the maximum, so the test is a
/// single scan. (The companion inequality max(R_i) > min(R_{i+1}) is
/// automatic: the boundary between maximal ascending runs descends.)
pub fn is_pop_stacked(perm: &Permutation) -> bool {
    let v = perm.values();
    let runs = decompose_runs(perm, Direction::Ascending);
    runs.runs()
        .windows(2)
        .all(|w| v[w[0].start] < v[w[1].end - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn one_line_validation() {
        assert!(Permutation::from_one_line(vec![2, 1, 3]).is_ok());
        assert!(Permutation::from_one_line(vec![]).is_ok());
        assert!(Permutation::from_one_line(vec![0, 1]).is_err());
        assert!(Permutation::from_one_line(vec![1, 3]).is_err());
        assert!(Permutation::from_one_line(vec![2, 2, 1]).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(p("617849235").values(), &[6, 1, 7, 8, 4, 9, 2, 3, 5]);
        assert_eq!(p("6,1,7,8,4,9,2,3,5").values(), &[6, 1, 7, 8, 4, 9, 2, 3, 5]);
        assert_eq!(p("10 2 1 3 4 5 6 7 8 9").len(), 10);
        assert!("10,2".parse::<Permutation>().is_err());
        assert!("abc".parse::<Permutation>().is_err());
    }

    #[test]
    fn ascending_runs_of_617849235() {
        let perm = p("617849235");
        let dec = decompose_runs(&perm, Direction::Ascending);
        let runs: Vec<Vec<u32>> = dec
            .runs()
            .iter()
            .map(|r| perm.values()[r.clone()].to_vec())
            .collect();
        assert_eq!(runs, vec![vec![6], vec![1, 7, 8], vec![4, 9], vec![2, 3, 5]]);
    }

    #[test]
    fn descending_runs_of_617849235() {
        let perm = p("617849235");
        let dec = decompose_runs(&perm, Direction::Descending);
        let runs: Vec<Vec<u32>> = dec
            .runs()
            .iter()
            .map(|r| perm.values()[r.clone()].to_vec())
            .collect();
        assert_eq!(
            runs,
            vec![vec![6, 1], vec![7], vec![8, 4], vec![9, 2], vec![3], vec![5]]
        );
    }

    #[test]
    fn empty_permutation_has_no_runs() {
        let e = Permutation::identity(0);
        assert_eq!(decompose_runs(&e, Direction::Ascending).run_count(), 0);
        assert_eq!(pop_stack(&e), e);
        assert!(is_pop_stacked(&e));
        assert!(is_sortable_k(&e, 0));
    }

    #[test]
    fn pop_stack_examples() {
        assert_eq!(pop_stack(&p("5321764")), p("1235467"));
        assert_eq!(pop_stack(&p("617849235")), p("167482935"));
        let id = Permutation::identity(6);
        assert_eq!(pop_stack(&id), id);
    }

    #[test]
    fn sortable_examples() {
        assert!(is_sortable_k(&Permutation::identity(4), 0));
        assert!(!is_sortable_k(&p("21"), 0));
        assert!(is_sortable_k(&p("21"), 1));
        // 5321764 -> 1235467 -> identity: two passes.
        assert!(!is_sortable_k(&p("5321764"), 1));
        assert!(is_sortable_k(&p("5321764"), 2));
        // Once sorted, further passes change nothing.
        assert!(is_sortable_k(&p("5321764"), 5));
    }

    #[test]
    fn every_length_n_permutation_sorts_in_n_minus_1_passes() {
        for n in 1..=8 {
            let mut perm = Permutation::identity(n);
            loop {
                assert!(is_sortable_k(&perm, n - 1), "{perm:?}");
                if !crate::brute::next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }

    #[test]
    fn pop_stacked_examples() {
        assert!(is_pop_stacked(&Permutation::identity(5)));
        assert!(!is_pop_stacked(&p("21")));
        assert!(is_pop_stacked(&p("167482935")));
    }

    #[test]
    fn image_of_pass_matches_characterization() {
        use std::collections::HashSet;
        for n in 0..=8 {
            let mut image = HashSet::new();
            let mut perm = Permutation::identity(n);
            loop {
                image.insert(pop_stack(&perm));
                if !crate::brute::next_permutation(&mut perm) {
                    break;
                }
            }
            let mut perm = Permutation::identity(n);
            loop {
                assert_eq!(image.contains(&perm), is_pop_stacked(&perm), "{perm:?}");
                if !crate::brute::next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }
}
