//! Hierarchical sorting trees, block sort, tree sort and the named estimators.

mod budget;
mod properties;
mod sort;

pub use budget::{BudgetMode, SampleBudget, SampleScheduler};
pub use properties::{check_property1, check_property2, refined_oracle, Property1Report, Property2Report};
pub use sort::{block_sort, estimate, tree_sort, BlockSortOutput, BlockSortRecord, TreeSortOutput};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;
use crate::rng::Rng;
use crate::trisection::NeighborhoodContext;

/// Node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Lower part of a split (and the root).
    Zero,
    /// Undecided middle part; always a leaf.
    P,
    /// Upper part of a split.
    One,
}

/// Labelled expert subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Experts, sorted.
    pub members: Vec<usize>,
    /// Label.
    pub kind: NodeKind,
    /// Depth, the root has depth 0.
    pub depth: usize,
    /// Children `(O, P, I)` as node ids.
    pub children: Option<[usize; 3]>,
    /// Conservative triple `(Ō, P̄, Ī)` recorded at the split.
    pub conservative: Option<[Vec<usize>; 3]>,
}

/// Ternary-labelled hierarchical sorting tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortingTree {
    /// Arena; node 0 is the root.
    pub nodes: Vec<Node>,
    n: usize,
}

impl SortingTree {
    /// Tree with the single root `[n]` labelled zero.
    pub fn new(n: usize) -> Self {
        Self {
            nodes: vec![Node {
                members: (0..n).collect(),
                kind: NodeKind::Zero,
                depth: 0,
                children: None,
                conservative: None,
            }],
            n,
        }
    }

    /// Number of experts.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Attaches `(O, P, I)` and the conservative triple to a zero/one leaf.
    pub fn add_children(
        &mut self,
        node: usize,
        aggressive: [Vec<usize>; 3],
        conservative: [Vec<usize>; 3],
    ) -> Result<[usize; 3]> {
        let parent = &self.nodes[node];
        if parent.kind == NodeKind::P || parent.children.is_some() {
            return Err(invalid("children can only be added to a zero/one leaf"));
        }
        let mut all: Vec<usize> = aggressive.iter().flatten().copied().collect();
        all.sort_unstable();
        if all != parent.members {
            return Err(Error::InternalInvariant(format!(
                "children of node {node} do not partition it"
            )));
        }
        let depth = parent.depth + 1;
        let kinds = [NodeKind::Zero, NodeKind::P, NodeKind::One];
        let first = self.nodes.len();
        for (mut members, kind) in aggressive.into_iter().zip(kinds) {
            members.sort_unstable();
            self.nodes.push(Node {
                members,
                kind,
                depth,
                children: None,
                conservative: None,
            });
        }
        let ids = [first, first + 1, first + 2];
        self.nodes[node].children = Some(ids);
        self.nodes[node].conservative = Some(conservative);
        Ok(ids)
    }

    /// Node ids in ternary-label order (depth-first, children `O < P < I`).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some(ch) = self.nodes[id].children {
                stack.extend(ch.iter().rev());
            }
        }
        out
    }

    /// Nonempty zero/one nodes at `depth` in ternary-label order.
    pub fn ordered_groups(&self, depth: usize) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&id| {
                let node = &self.nodes[id];
                node.depth == depth && node.kind != NodeKind::P && !node.members.is_empty()
            })
            .collect()
    }

    /// Leaves in ternary-label order.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].children.is_none())
            .collect()
    }

    /// Neighbor groups of `node` among the zero/one nodes of its depth.
    pub fn order_leaves(&self, node: usize) -> NeighborhoodContext {
        let groups = self.ordered_groups(self.nodes[node].depth);
        let Some(pos) = groups.iter().position(|&g| g == node) else {
            return NeighborhoodContext::root();
        };
        NeighborhoodContext {
            above: groups[pos + 1..]
                .iter()
                .map(|&g| self.nodes[g].members.clone())
                .collect(),
            below: groups[..pos]
                .iter()
                .rev()
                .map(|&g| self.nodes[g].members.clone())
                .collect(),
        }
    }

    /// Nested JSON representation.
    pub fn to_json(&self) -> Value {
        self.node_json(0)
    }

    fn node_json(&self, id: usize) -> Value {
        let node = &self.nodes[id];
        let mut v = json!({
            "type": node.kind,
            "depth": node.depth,
            "members": node.members,
        });
        if let Some(ch) = node.children {
            v["children"] = Value::Array(ch.iter().map(|&c| self.node_json(c)).collect());
        }
        if let Some(cons) = &node.conservative {
            v["conservative"] = json!(cons);
        }
        v
    }
}

/// Prefix-sum rank intervals `[π⁻+1, π⁺]` (1-based) of consecutive leaves.
pub fn rank_intervals(sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let iv = (start + 1, start + s);
            start += s;
            iv
        })
        .collect()
}

/// Ranks experts leaf by leaf in tree order, uniformly at random within a leaf.
pub fn extract_permutation(tree: &SortingTree, rng: &mut Rng) -> Result<Permutation> {
    let mut order = Vec::with_capacity(tree.n());
    for id in tree.leaves() {
        let mut members = tree.nodes[id].members.clone();
        if members.len() > 1 {
            members.shuffle(rng);
        }
        order.extend(members);
    }
    Permutation::from_order(&order)
        .map_err(|_| Error::InternalInvariant("leaves do not partition the experts".into()))
}
