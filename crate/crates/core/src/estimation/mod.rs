//! Matrix reconstruction, the Borda-count baseline and the pairwise estimator.

mod pairwise;
mod projection;

pub use pairwise::{pairwise_estimator, PairwiseComparisons};
pub use projection::{
    estimate_matrix, isotonic_regression_1d, project_bi_isotonic, reconstruct, ProjectionReport,
    ProjectionSettings, Reconstruction,
};

use crate::error::{invalid, Result};
use crate::model::Matrix;
use crate::partial::ObservationLog;
use crate::perm::Permutation;

/// Ranks experts by ascending score, ties by index.
pub fn rank_by_scores(scores: &[f64]) -> Permutation {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    Permutation::from_order(&order).expect("sorted indices form a permutation")
}

/// Borda count on a full matrix: ascending row sums.
pub fn borda_rank(y: &Matrix) -> Permutation {
    let sums: Vec<f64> = y.rows().into_iter().map(|r| r.sum()).collect();
    rank_by_scores(&sums)
}

/// Borda count on a log: ascending sums of all observed values per expert.
pub fn borda_rank_log(log: &ObservationLog) -> Permutation {
    let mut sums = vec![0.0; log.n];
    for rec in &log.records {
        sums[rec.i] += rec.y;
    }
    rank_by_scores(&sums)
}

/// Borda count on the average of several full samples.
pub fn borda_rank_pool(pool: &[Matrix]) -> Result<Permutation> {
    let first = pool.first().ok_or_else(|| invalid("sample pool is empty"))?;
    let mut acc = Matrix::zeros(first.raw_dim());
    for y in pool {
        if y.dim() != first.dim() {
            return Err(invalid("samples differ in shape"));
        }
        acc += y;
    }
    Ok(borda_rank(&acc))
}
