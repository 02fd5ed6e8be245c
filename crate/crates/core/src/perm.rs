//! Permutations of experts.
//!
//! A [`Permutation`] maps each expert `i` (0-based) to its rank `π(i)`
//! (0-based, rank 0 is the lowest expert).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::Rng;

/// Bijection from experts to ranks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation {
    rank: Vec<usize>,
}

impl Permutation {
    /// Identity on `n` experts.
    pub fn identity(n: usize) -> Self {
        Self {
            rank: (0..n).collect(),
        }
    }

    /// Builds from the rank of every expert; fails unless it is a bijection.
    pub fn from_ranks(rank: Vec<usize>) -> Result<Self> {
        let n = rank.len();
        let mut seen = vec![false; n];
        for &r in &rank {
            if r >= n || seen[r] {
                return Err(invalid(format!("ranks {rank:?} are not a bijection on 0..{n}")));
            }
            seen[r] = true;
        }
        Ok(Self { rank })
    }

    /// Builds from the experts listed in increasing rank order.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let n = order.len();
        let mut rank = vec![usize::MAX; n];
        for (r, &e) in order.iter().enumerate() {
            if e >= n || rank[e] != usize::MAX {
                return Err(invalid(format!("order {order:?} is not a bijection on 0..{n}")));
            }
            rank[e] = r;
        }
        Ok(Self { rank })
    }

    /// Uniformly random permutation.
    pub fn random(n: usize, rng: &mut Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self::from_order(&order).expect("shuffled identity is a bijection")
    }

    /// Number of experts.
    pub fn len(&self) -> usize {
        self.rank.len()
    }

    /// True when there are no experts.
    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Rank of expert `i`.
    pub fn rank(&self, i: usize) -> usize {
        self.rank[i]
    }

    /// Ranks of all experts.
    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    /// Experts in increasing rank order (the inverse permutation).
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.rank.len()];
        for (e, &r) in self.rank.iter().enumerate() {
            order[r] = e;
        }
        order
    }
}
