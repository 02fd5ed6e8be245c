use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::Matrix;
use crate::perm::Permutation;
use crate::rng::Rng;
use crate::trisection::{double_trisection, NeighborhoodContext, TrisectionParams, Variant};

use super::{extract_permutation, BudgetMode, NodeKind, SampleBudget, SampleScheduler, SortingTree};

/// Output of one block sort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockSortOutput {
    /// `(O, P, I)`.
    pub aggressive: [Vec<usize>; 3],
    /// `(Ō, P̄, Ī)`.
    pub conservative: [Vec<usize>; 3],
    /// Iterations run.
    pub iterations: u64,
    /// Power-iteration fallbacks across all rounds.
    pub pca_fallbacks: usize,
    /// Iterations skipped because the pivot rank left the remaining group.
    pub skipped_iterations: u64,
    /// True when the final overlap correction was applied.
    pub overlap_corrected: bool,
}

/// One block sort performed during tree sort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSortRecord {
    /// Node that was split.
    pub node: usize,
    /// Its members.
    pub group: Vec<usize>,
    /// Split.
    pub output: BlockSortOutput,
}

fn minus(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

fn merge(a: &[usize], b: &[usize]) -> Vec<usize> {
    crate::aggregation::union_sorted(a, b)
}

/// Splits `group` into aggressive and conservative triples.
///
/// Iteration `τ` uses samples `first + 6τ .. first + 6τ + 5`.
pub fn block_sort(
    samples: &SampleScheduler<'_>,
    first: u64,
    ctx: &NeighborhoodContext,
    group: &[usize],
    params: &TrisectionParams,
    budget: &SampleBudget,
) -> Result<BlockSortOutput> {
    let mut g = group.to_vec();
    g.sort_unstable();
    let mut out = BlockSortOutput::default();
    let (mut o, mut i, mut o_bar, mut i_bar) = (vec![], vec![], vec![], vec![]);
    for tau in 0..budget.tau_inf {
        let remaining = minus(&minus(&g, &o_bar), &i_bar);
        if remaining.len() <= 1 {
            break;
        }
        let gamma = (g.len() / 2) as i64 - o_bar.len() as i64;
        if gamma < 1 || gamma as usize > remaining.len() {
            out.skipped_iterations += 1;
            break;
        }
        let draws: Vec<&Matrix> = (0..6)
            .map(|s| samples.draw(first + 6 * tau + s))
            .collect::<Result<_>>()?;
        let dt = double_trisection(&draws, ctx, &remaining, gamma as usize, params)?;
        out.iterations += 1;
        out.pca_fallbacks += dt.pca_fallbacks;
        let res = dt.result;
        let next = (merge(&o, &res.l), merge(&i, &res.u), merge(&o_bar, &res.l_bar), merge(&i_bar, &res.u_bar));
        let changed = next.0 != o || next.1 != i || next.2 != o_bar || next.3 != i_bar;
        (o, i, o_bar, i_bar) = next;
        if !changed && samples.mode() == BudgetMode::Practical {
            break;
        }
    }
    if o.iter().any(|x| i.binary_search(x).is_ok()) {
        let (o_snap, i_snap) = (o.clone(), i.clone());
        o = minus(&o_snap, &i_snap);
        i = minus(&i_snap, &o_snap);
        out.overlap_corrected = true;
    }
    let p = minus(&minus(&g, &o), &i);
    let p_bar = minus(&minus(&g, &o_bar), &i_bar);
    out.aggressive = [o, p, i];
    out.conservative = [o_bar, p_bar, i_bar];
    Ok(out)
}

/// Result of tree sort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSortOutput {
    /// Final tree.
    pub tree: SortingTree,
    /// Estimated permutation.
    pub pi_hat: Permutation,
    /// Every block sort in execution order.
    pub records: Vec<BlockSortRecord>,
    /// Draws served from an already used sample.
    pub reuse_count: u64,
    /// Depth levels processed.
    pub depth_reached: usize,
}

/// Builds the sorting tree from the sample pool and extracts `π̂`.
///
/// Depth `t` draws from samples `6·τ_∞·t` onward; sibling leaves at a depth
/// share them.
pub fn tree_sort(
    pool: &[Matrix],
    params: &TrisectionParams,
    budget: &SampleBudget,
    rng: &mut Rng,
) -> Result<TreeSortOutput> {
    let scheduler = SampleScheduler::new(pool, budget.mode)?;
    let n = scheduler.dim().0;
    let mut tree = SortingTree::new(n);
    let mut records = Vec::new();
    let mut depth_reached = 0;
    for t in 0..budget.t_inf {
        let leaves: Vec<usize> = tree
            .ordered_groups(t)
            .into_iter()
            .filter(|&id| tree.nodes[id].children.is_none() && tree.nodes[id].members.len() > 1)
            .collect();
        if leaves.is_empty() {
            break;
        }
        depth_reached = t + 1;
        let first = (6 * t as u64).saturating_mul(budget.tau_inf);
        let outputs: Vec<Result<BlockSortOutput>> = leaves
            .par_iter()
            .map(|&id| {
                let ctx = tree.order_leaves(id);
                block_sort(&scheduler, first, &ctx, &tree.nodes[id].members, params, budget)
            })
            .collect();
        for (id, output) in leaves.into_iter().zip(outputs) {
            let output = output?;
            tree.add_children(id, output.aggressive.clone(), output.conservative.clone())?;
            records.push(BlockSortRecord {
                node: id,
                group: tree.nodes[id].members.clone(),
                output,
            });
        }
    }
    let pi_hat = extract_permutation(&tree, rng)?;
    debug_assert!(tree.nodes.iter().all(|n| n.kind != NodeKind::P || n.children.is_none()));
    Ok(TreeSortOutput {
        tree,
        pi_hat,
        records,
        reuse_count: scheduler.reuse_count(),
        depth_reached,
    })
}

/// Tree sort with the given variant threaded into the trisection.
pub fn estimate(
    pool: &[Matrix],
    variant: Variant,
    params: &TrisectionParams,
    budget: &SampleBudget,
    rng: &mut Rng,
) -> Result<Permutation> {
    Ok(tree_sort(pool, &params.for_variant(variant), budget, rng)?.pi_hat)
}
