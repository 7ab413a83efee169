//! Ordered set partitions (ballots) and the overlapping condition.
//!
//! A ballot of [n] is an ordered sequence of disjoint nonempty blocks whose
//! union is {1, ..., n}. Reading the maximal ascending runs of a permutation
//! as sets gives a ballot; concatenating the blocks of a suitable ballot in
//! ascending order inverts that map. Pop-stacked permutations correspond to
//! *overlapping* ballots, where the value intervals of adjacent blocks
//! properly overlap.

use crate::perm::{decompose_runs, Direction, Permutation};
use crate::CoreError;

/// An ordered set partition of {1, ..., n}. Blocks are stored sorted
/// ascending; block order is significant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ballot {
    n: usize,
    blocks: Vec<Vec<u32>>,
}

impl Ballot {
    /// Builds a ballot, sorting each block and checking that the blocks are
    /// nonempty, disjoint, and cover 1..=n exactly.
    pub fn new(blocks: Vec<Vec<u32>>) -> Result<Self, CoreError> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(CoreError::NotAPartition { n });
            }
            for &v in block {
                if v < 1 || v as usize > n || seen[v as usize - 1] {
                    return Err(CoreError::NotAPartition { n });
                }
                seen[v as usize - 1] = true;
            }
        }
        let mut blocks = blocks;
        for block in &mut blocks {
            block.sort_unstable();
        }
        Ok(Ballot { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    fn min(&self, i: usize) -> u32 {
        self.blocks[i][0]
    }

    fn max(&self, i: usize) -> u32 {
        *self.blocks[i].last().unwrap()
    }
}

/// Whether every adjacent block pair properly overlaps:
/// max(B_i) > min(B_{i+1}) and min(B_i) < max(B_{i+1}).
pub fn is_overlapping(ballot: &Ballot) -> bool {
    (1..ballot.block_count())
        .all(|i| ballot.max(i - 1) > ballot.min(i) && ballot.min(i - 1) < ballot.max(i))
}

/// Reads the maximal ascending runs of a permutation as a ballot. Runs are
/// already ascending, so the blocks are copied verbatim.
pub fn perm_to_ballot(perm: &Permutation) -> Ballot {
    let v = perm.values();
    let blocks = decompose_runs(perm, Direction::Ascending)
        .runs()
        .iter()
        .map(|r| v[r.clone()].to_vec())
        .collect();
    Ballot {
        n: perm.len(),
        blocks,
    }
}

/// Concatenates the blocks of a ballot, each in ascending order.
///
/// This inverts [`perm_to_ballot`] exactly when every adjacent pair
/// satisfies max(B_i) > min(B_{i+1}): the boundary then descends, so each
/// block stays a *maximal* ascending run of the result. Otherwise the
/// concatenation would merge two blocks into one run and the map would not
/// be a section, so the input is rejected.
pub fn ballot_to_perm(ballot: &Ballot) -> Result<Permutation, CoreError> {
    for i in 1..ballot.block_count() {
        if ballot.max(i - 1) <= ballot.min(i) {
            return Err(CoreError::BlocksNotConcatenable { left: i - 1, right: i });
        }
    }
    let values: Vec<u32> = ballot.blocks.iter().flatten().copied().collect();
    Ok(Permutation::from_one_line(values).expect("partition check makes this a permutation"))
}
