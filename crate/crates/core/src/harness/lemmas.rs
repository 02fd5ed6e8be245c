use serde::{Deserialize, Serialize};

use crate::aggregation::{build_grids, encode_matrix, encode_set, DyadicGrids};
use crate::error::Result;
use crate::model::{Matrix, ProblemInstance};
use crate::tree::{check_property1, refined_oracle, NodeKind, TreeSortOutput};
use crate::trisection::{cusum, dimension_reduction_cp, rtilde_cp, PaddedSeries, TrisectionParams, ZETA_EFF};

use super::loss::perm_loss;

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

fn grids_for(m: &Matrix, zeta: f64) -> Result<DyadicGrids> {
    let z = if zeta > 0.0 { zeta } else { ZETA_EFF };
    build_grids(m.nrows(), m.ncols(), z)
}

/// Within-group variance `‖M(P̄) − M̄(P̄)‖²_F`.
pub fn group_variance(m: &Matrix, p_bar: &[usize]) -> f64 {
    if p_bar.is_empty() {
        return 0.0;
    }
    let d = m.ncols();
    let mut total = 0.0;
    for k in 0..d {
        let mean = p_bar.iter().map(|&i| m[[i, k]]).sum::<f64>() / p_bar.len() as f64;
        total += p_bar.iter().map(|&i| (m[[i, k]] - mean).powi(2)).sum::<f64>();
    }
    total
}

/// Population block sets `(Q*_cp, Q̄*_cp)` of the oblivious reduction:
/// CUSUMs of the mean expert at width `8r` above `h/2`, and at width `r̃` above `h/8`.
pub fn population_blocks(
    m: &Matrix,
    p_bar: &[usize],
    h: f64,
    r: usize,
    params: &TrisectionParams,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mbar = PaddedSeries::mean_of(m, p_bar)?;
    let d = m.ncols();
    let width = rtilde_cp(p_bar.len(), h, r, d, params);
    let inner: Vec<usize> = (1..=d)
        .filter(|&k| cusum(&mbar, k as i64, 8 * r as u64) >= h / 2.0)
        .collect();
    let outer: Vec<usize> = (1..=d)
        .filter(|&k| cusum(&mbar, k as i64, width) >= h / 8.0)
        .collect();
    Ok((encode_set(&inner, r), encode_set(&outer, r)))
}

/// Energy captured by the best scale and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `‖M(P̄) − M̄(P̄)‖²_F`.
    pub variance: f64,
    /// Largest right-hand side over `(r, h)`.
    pub best_bound: f64,
    /// `variance ≤ best_bound`.
    pub holds: bool,
}

/// Checks that some `(r, h)` satisfies
/// `‖M(P̄) − M̄(P̄)‖² ≤ 16ζ² + 96|R||H|·‖[Θ(P̄,Q*_cp) − Θ̄]_{√r h}‖²`.
pub fn energy_capture(m: &Matrix, p_bar: &[usize], params: &TrisectionParams) -> Result<EnergyReport> {
    let grids = grids_for(m, params.zeta)?;
    let variance = group_variance(m, p_bar);
    let factor = 96.0 * (grids.scales.len() * grids.heights.len()) as f64;
    let mut best = 16.0 * params.zeta * params.zeta;
    for &h in &grids.heights {
        for &r in &grids.scales {
            let (q_star, _) = population_blocks(m, p_bar, h, r, params)?;
            if q_star.is_empty() {
                continue;
            }
            let theta = encode_matrix(m, p_bar, &q_star, r)?.centered()?;
            let eta = (r as f64).sqrt() * h;
            let hits = theta.iter().filter(|v| v.abs() >= eta).count();
            let bound = 16.0 * params.zeta * params.zeta + factor * hits as f64 * eta * eta;
            best = best.max(bound);
        }
    }
    Ok(EnergyReport {
        variance,
        best_bound: best,
        holds: variance <= best * (1.0 + 1e-12),
    })
}

/// Block-count bound over every `(h, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCountReport {
    /// Pairs checked.
    pub pairs: usize,
    /// Pairs with `|Q̄*_cp| > 64 r̃/(r h)`.
    pub violations: usize,
    /// Largest `|Q̄*_cp| / (64 r̃/(r h))`.
    pub worst_ratio: f64,
}

/// Checks `|Q̄*_cp| ≤ 64 r̃/(r h)` for every `(h, r)`.
pub fn block_count(m: &Matrix, p_bar: &[usize], params: &TrisectionParams) -> Result<BlockCountReport> {
    let grids = grids_for(m, params.zeta)?;
    let mut report = BlockCountReport {
        pairs: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for &h in &grids.heights {
        for &r in &grids.scales {
            let (_, q_bar) = population_blocks(m, p_bar, h, r, params)?;
            let width = rtilde_cp(p_bar.len(), h, r, m.ncols(), params) as f64;
            let bound = 64.0 * width / (r as f64 * h);
            let ratio = q_bar.len() as f64 / bound;
            report.pairs += 1;
            report.worst_ratio = report.worst_ratio.max(ratio);
            if ratio > 1.0 {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

/// Sandwich outcome of the oblivious reduction on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Pairs checked.
    pub pairs: usize,
    /// Pairs with `Q*_cp ⊆ Q̂_cp ⊆ Q̄*_cp`.
    pub held: usize,
}

impl SandwichReport {
    /// The inclusion held for every pair.
    pub fn all(&self) -> bool {
        self.held == self.pairs
    }
}

/// Checks `Q*_cp ⊆ Q̂_cp ⊆ Q̄*_cp` for every `(h, r)` on sample `y`.
pub fn sandwich(m: &Matrix, y: &Matrix, p_bar: &[usize], params: &TrisectionParams) -> Result<SandwichReport> {
    let grids = grids_for(m, params.zeta)?;
    let mut report = SandwichReport { pairs: 0, held: 0 };
    for &h in &grids.heights {
        for &r in &grids.scales {
            let (inner, outer) = population_blocks(m, p_bar, h, r, params)?;
            let found = dimension_reduction_cp(y, p_bar, h, r, params)?;
            report.pairs += 1;
            if subset(&inner, &found) && subset(&found, &outer) {
                report.held += 1;
            }
        }
    }
    Ok(report)
}

/// Loss bound of a tree-sort run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBoundReport {
    /// Every block sort satisfied the block-sort property.
    pub property1: bool,
    /// Block sorts checked.
    pub block_sorts: usize,
    /// Block sorts satisfying the property.
    pub block_sorts_ok: usize,
    /// Realized `perm_loss`.
    pub loss: f64,
    /// `10 t_∞ Σ_t Σ_{P̄} ‖M(P̄) − M̄(P̄)‖²_F`.
    pub bound: f64,
}

impl LossBoundReport {
    /// `Some(loss ≤ bound)` when the property held everywhere, else `None`.
    pub fn holds(&self) -> Option<bool> {
        self.property1.then_some(self.loss <= self.bound + 1e-9)
    }
}

/// Checks the block-sort property at every node and the resulting loss bound.
///
/// Ties between identical rows are broken in favour of the tree's own order.
pub fn loss_general(inst: &ProblemInstance, trace: &TreeSortOutput, t_inf: usize) -> Result<LossBoundReport> {
    let oracle = refined_oracle(&inst.m, &inst.pi_star, trace.pi_hat.ranks());
    let mut ok = 0;
    let mut variance = 0.0;
    for rec in &trace.records {
        if check_property1(&rec.group, &rec.output.aggressive, &rec.output.conservative, &oracle).ok() {
            ok += 1;
        }
        variance += group_variance(&inst.m, &rec.output.conservative[1]);
    }
    for node in &trace.tree.nodes {
        if node.kind != NodeKind::P && node.children.is_none() && node.members.len() > 1 {
            variance += group_variance(&inst.m, &node.members);
        }
    }
    Ok(LossBoundReport {
        property1: ok == trace.records.len(),
        block_sorts: trace.records.len(),
        block_sorts_ok: ok,
        loss: perm_loss(&inst.m, &trace.pi_hat, &inst.pi_star)?,
        bound: 10.0 * t_inf.max(1) as f64 * variance,
    })
}

/// Pass/fail flags of the lemma checks for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaFlags {
    /// Energy capture on the root and every conservative middle group.
    pub energy: bool,
    /// Block-count bound on the same groups.
    pub block_count: bool,
    /// Loss bound, `None` when some block sort violated the property.
    pub loss_general: Option<bool>,
    /// Fraction of block sorts satisfying the property.
    pub property1_rate: f64,
}

/// Evaluates the deterministic and conditional inequalities on a run.
pub fn verify_lemmas(
    inst: &ProblemInstance,
    trace: &TreeSortOutput,
    params: &TrisectionParams,
    t_inf: usize,
) -> Result<LemmaFlags> {
    let mut groups: Vec<Vec<usize>> = vec![(0..inst.n()).collect()];
    groups.extend(
        trace
            .records
            .iter()
            .map(|r| r.output.conservative[1].clone())
            .filter(|g| g.len() > 1),
    );
    let mut energy = true;
    let mut blocks = true;
    for g in &groups {
        energy &= energy_capture(&inst.m, g, params)?.holds;
        blocks &= block_count(&inst.m, g, params)?.violations == 0;
    }
    let lg = loss_general(inst, trace, t_inf)?;
    Ok(LemmaFlags {
        energy,
        block_count: blocks,
        loss_general: lg.holds(),
        property1_rate: if lg.block_sorts == 0 {
            1.0
        } else {
            lg.block_sorts_ok as f64 / lg.block_sorts as f64
        },
    })
}
