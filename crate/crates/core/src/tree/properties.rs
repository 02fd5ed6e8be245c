use serde::{Deserialize, Serialize};

use crate::model::{permute_rows, Matrix};
use crate::perm::Permutation;
use crate::trisection::TrisectionResult;

/// Oracle ranks with ties between identical rows broken by `position`, then
/// by expert index. Any such refinement is itself an oracle permutation.
pub fn refined_oracle(m: &Matrix, pi_star: &Permutation, position: &[usize]) -> Vec<usize> {
    let n = m.nrows();
    let sorted = permute_rows(m, pi_star);
    let mut class = vec![0usize; n];
    for r in 1..n {
        let same = sorted
            .row(r)
            .iter()
            .zip(sorted.row(r - 1).iter())
            .all(|(a, b)| (a - b).abs() <= 1e-12);
        class[r] = if same { class[r - 1] } else { r };
    }
    let mut experts: Vec<usize> = (0..n).collect();
    experts.sort_by_key(|&e| (class[pi_star.rank(e)], position[e], e));
    let mut rank = vec![0; n];
    for (r, e) in experts.into_iter().enumerate() {
        rank[e] = r;
    }
    rank
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    let b = sorted(b);
    a.iter().all(|x| b.binary_search(x).is_ok())
}

fn is_partition(parts: &[Vec<usize>; 3], g: &[usize]) -> bool {
    let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
    all.sort_unstable();
    all == sorted(g)
}

/// Outcome of the block-sort property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property1Report {
    /// Both triples partition the group.
    pub partition: bool,
    /// `Ō ⊆ O`, `Ī ⊆ I`, `P ⊆ P̄`.
    pub nesting: bool,
    /// Every expert below some `i ∈ Ō` is in `O`; every expert above some `i ∈ Ī` is in `I`.
    pub omega: bool,
    /// Every expert of `O` ranks below every expert of `I`.
    pub order: bool,
    /// `|O| ≤ ⌊|G|/2⌋` and `|I| ≤ ⌈|G|/2⌉` (the pivot is the `⌊|G|/2⌋`-th expert).
    pub size: bool,
}

impl Property1Report {
    /// All parts hold.
    pub fn ok(&self) -> bool {
        self.partition && self.nesting && self.omega && self.order && self.size
    }
}

/// Checks a block-sort output against oracle ranks.
pub fn check_property1(
    g: &[usize],
    aggressive: &[Vec<usize>; 3],
    conservative: &[Vec<usize>; 3],
    oracle_rank: &[usize],
) -> Property1Report {
    let [o, p, i] = aggressive;
    let [o_bar, p_bar, i_bar] = conservative;
    let in_o = sorted(o);
    let in_i = sorted(i);
    let below_ok = o_bar.iter().all(|&x| {
        g.iter()
            .filter(|&&y| oracle_rank[y] < oracle_rank[x])
            .all(|y| in_o.binary_search(y).is_ok())
    });
    let above_ok = i_bar.iter().all(|&x| {
        g.iter()
            .filter(|&&y| oracle_rank[y] > oracle_rank[x])
            .all(|y| in_i.binary_search(y).is_ok())
    });
    let max_o = o.iter().map(|&x| oracle_rank[x]).max();
    let min_i = i.iter().map(|&x| oracle_rank[x]).min();
    Property1Report {
        partition: is_partition(aggressive, g) && is_partition(conservative, g),
        nesting: subset(o_bar, o) && subset(i_bar, i) && subset(p, p_bar),
        omega: below_ok && above_ok,
        order: match (max_o, min_i) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        },
        size: 2 * o.len() <= g.len() && 2 * i.len() <= g.len() + 1,
    }
}

/// Outcome of the double-trisection property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property2Report {
    /// `L̄ ⊆ L` and `Ū ⊆ U`.
    pub nesting: bool,
    /// Ranks within `P̄`: below `γ` on `L`, above `γ` on `U`.
    pub ranks: bool,
    /// Every expert below some `i ∈ L̄` is in `L`; above some `i ∈ Ū` is in `U`.
    pub omega: bool,
}

impl Property2Report {
    /// All parts hold.
    pub fn ok(&self) -> bool {
        self.nesting && self.ranks && self.omega
    }
}

/// Checks a double-trisection output against oracle ranks (`gamma` 1-based).
pub fn check_property2(
    p_bar: &[usize],
    gamma: usize,
    res: &TrisectionResult,
    oracle_rank: &[usize],
) -> Property2Report {
    let mut by_rank = p_bar.to_vec();
    by_rank.sort_by_key(|&e| oracle_rank[e]);
    let local = |e: usize| by_rank.iter().position(|&x| x == e).map(|p| p + 1).unwrap_or(0);
    let l = sorted(&res.l);
    let u = sorted(&res.u);
    let below_ok = res.l_bar.iter().all(|&x| {
        p_bar
            .iter()
            .filter(|&&y| oracle_rank[y] < oracle_rank[x])
            .all(|y| l.binary_search(y).is_ok())
    });
    let above_ok = res.u_bar.iter().all(|&x| {
        p_bar
            .iter()
            .filter(|&&y| oracle_rank[y] > oracle_rank[x])
            .all(|y| u.binary_search(y).is_ok())
    });
    Property2Report {
        nesting: subset(&res.l_bar, &res.l) && subset(&res.u_bar, &res.u),
        ranks: res.l.iter().all(|&e| local(e) < gamma) && res.u.iter().all(|&e| local(e) > gamma),
        omega: below_ok && above_ok,
    }
}
