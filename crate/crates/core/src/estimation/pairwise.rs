use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::partial::{estimate_wmp, ObservationLog, WmpOutcome};
use crate::perm::Permutation;
use crate::rng::{substream, streams, Rng};
use crate::tree::BudgetMode;
use crate::trisection::TrisectionParams;

use super::rank_by_scores;

/// Detected pairwise orderings and the ranking they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparisons {
    /// Pairs `(i, j)` meaning `i ≺ j`, sorted.
    pub pc: Vec<(usize, usize)>,
    /// `φ(j)`: number of experts detected below `j`.
    pub phi: Vec<usize>,
    /// Experts sorted by `φ` ascending, ties by index.
    pub pi_hat: Permutation,
}

impl PairwiseComparisons {
    /// Every detected pair agrees with the given ranks.
    pub fn is_consistent(&self, rank: &[usize]) -> bool {
        self.pc.iter().all(|&(i, j)| rank[i] < rank[j])
    }
}

/// Ordering of one pair, or `None` when the root split is not `(∅, {a}, {b})`.
fn compare_pair(
    log: &ObservationLog,
    pair: [usize; 2],
    params: &TrisectionParams,
    mode: BudgetMode,
    rng: &mut Rng,
) -> Result<Option<(usize, usize)>> {
    let sub = log.restrict(&pair);
    let out = estimate_wmp(&sub, params, mode, rng)?;
    let WmpOutcome::Tree(tree) = out.outcome else {
        return Ok(None);
    };
    let nodes = &tree.tree.nodes;
    let Some([o, p, i]) = nodes[0].children else {
        return Ok(None);
    };
    match (&nodes[o].members[..], &nodes[p].members[..], &nodes[i].members[..]) {
        ([], [a], [b]) => Ok(Some((pair[*a], pair[*b]))),
        _ => Ok(None),
    }
}

/// Runs the partial-observation estimator on every pair of experts and ranks
/// by the number of experts detected below each one.
pub fn pairwise_estimator(
    log: &ObservationLog,
    params: &TrisectionParams,
    mode: BudgetMode,
    rng: &mut Rng,
) -> Result<PairwiseComparisons> {
    let n = log.n;
    if n < 2 {
        return Err(invalid("pairwise comparisons need at least two experts"));
    }
    let base: u64 = rng.random();
    let pairs: Vec<[usize; 2]> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| [i, j]))
        .collect();
    let found: Vec<Option<(usize, usize)>> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &pair)| {
            let mut r = substream(base, streams::ESTIMATOR, idx as u64);
            compare_pair(log, pair, params, mode, &mut r)
        })
        .collect::<Result<_>>()?;
    let mut pc: Vec<(usize, usize)> = found.into_iter().flatten().collect();
    pc.sort_unstable();
    let mut phi = vec![0usize; n];
    for &(_, j) in &pc {
        phi[j] += 1;
    }
    let scores: Vec<f64> = phi.iter().map(|&c| c as f64).collect();
    Ok(PairwiseComparisons {
        pi_hat: rank_by_scores(&scores),
        pc,
        phi,
    })
}
