use rayon::prelude::*;

use crate::aggregation::{build_grids, encode_prefix, PrefixSums};
use crate::error::{invalid, Error, Result};
use crate::model::Matrix;

use super::cusum::{reduce_cp, reduce_wm, NeighborSums, PaddedSeries};
use super::{pca_direction, pivot, threshold_weights, NeighborhoodContext, TrisectionParams};
use super::{TrisectionResult, Variant};

/// Result of one double trisection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DoubleTrisectionOutput {
    /// Union of all round outputs.
    pub result: TrisectionResult,
    /// Rounds whose power iteration fell back to the all-ones direction.
    pub pca_fallbacks: usize,
    /// Rounds with a nonempty block selection.
    pub active_rounds: usize,
}

/// Two trisections of `p_bar` around pivot rank `gamma` from six samples.
///
/// Sample 1 selects blocks for every `(h, r)`; samples 2–6 feed the local
/// row-sum pivot, the spectral direction, the weight thresholding and the
/// weighted pivot.
pub fn double_trisection(
    samples: &[&Matrix],
    ctx: &NeighborhoodContext,
    p_bar: &[usize],
    gamma: usize,
    params: &TrisectionParams,
) -> Result<DoubleTrisectionOutput> {
    if samples.len() != 6 {
        return Err(invalid(format!("double trisection needs 6 samples, got {}", samples.len())));
    }
    let (n, d) = samples[0].dim();
    if samples.iter().any(|s| s.dim() != (n, d)) {
        return Err(invalid("samples differ in shape"));
    }
    if p_bar.len() <= 1 {
        return Ok(DoubleTrisectionOutput::default());
    }
    if gamma == 0 || gamma > p_bar.len() {
        return Err(invalid(format!("pivot rank {gamma} outside 1..={}", p_bar.len())));
    }
    let grids = build_grids(n, d, params.zeta)?;
    let prepared: Vec<PrefixSums> = samples.iter().map(|s| PrefixSums::new(s)).collect();
    let ybar = PaddedSeries::mean_of(samples[0], p_bar)?;
    let neighbors = match params.mode {
        Variant::Ht => None,
        Variant::Wm | Variant::WmSr => Some(NeighborSums::new(&prepared[0], ctx)),
    };

    let rounds: Vec<(f64, usize)> = grids
        .heights
        .iter()
        .flat_map(|&h| grids.scales.iter().map(move |&r| (h, r)))
        .collect();
    let outcomes: Vec<Result<Option<(TrisectionResult, bool)>>> = rounds
        .par_iter()
        .map(|&(h, r)| {
            let q_hat = match &neighbors {
                None => reduce_cp(&ybar, p_bar.len(), h, r, params),
                Some(nb) => reduce_wm(nb, &ybar, p_bar.len(), h, r, &grids.scales, params),
            };
            if q_hat.is_empty() {
                return Ok(None);
            }
            local_round(&prepared, p_bar, &q_hat, r, gamma, params).map(Some)
        })
        .collect();

    let mut out = DoubleTrisectionOutput::default();
    for outcome in outcomes {
        if let Some((res, fallback)) = outcome? {
            out.result = out.result.union(&res);
            out.pca_fallbacks += usize::from(fallback);
            out.active_rounds += 1;
        }
    }
    Ok(out)
}

fn local_round(
    prepared: &[PrefixSums],
    p_bar: &[usize],
    q_hat: &[usize],
    r: usize,
    gamma: usize,
    params: &TrisectionParams,
) -> Result<(TrisectionResult, bool)> {
    let z: Vec<_> = prepared[1..]
        .iter()
        .map(|s| encode_prefix(s, p_bar, q_hat, r))
        .collect::<Result<_>>()?;
    let ones = vec![1.0; q_hat.len()];
    let row_sum = pivot(&z[0], &ones, gamma, params)?;

    let p_tilde: Vec<usize> = p_bar
        .iter()
        .copied()
        .filter(|e| row_sum.l_bar.binary_search(e).is_err() && row_sum.u_bar.binary_search(e).is_err())
        .collect();
    if p_tilde.is_empty() {
        return Ok((row_sum, false));
    }
    let (z3, z4, z5) = (z[1].restrict(&p_tilde), z[2].restrict(&p_tilde), z[3].restrict(&p_tilde));
    let (v_hat, fallback) = match pca_direction(&z3, &z4, &params.power) {
        Ok(v) => (v, false),
        Err(Error::NumericNonconvergence { .. }) => {
            let m = p_tilde.len();
            (vec![1.0 / (m as f64).sqrt(); m], true)
        }
        Err(e) => return Err(e),
    };
    let w_plus = threshold_weights(&v_hat, &z5, params)?;
    if w_plus.iter().all(|&w| w == 0.0) {
        return Ok((row_sum, fallback));
    }
    let spectral = pivot(&z[4], &w_plus, gamma, params)?;
    Ok((row_sum.union(&spectral), fallback))
}
