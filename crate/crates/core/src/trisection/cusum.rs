use crate::aggregation::{column_mean, encode_set, union_sorted, PrefixSums};
use crate::error::{invalid, Result};
use crate::model::Matrix;

use super::{NeighborhoodContext, TrisectionParams, Variant};

/// Window widths are capped here; beyond it every CUSUM is at its limit.
const MAX_WIDTH: u64 = 1 << 52;

/// Column profile over `[1, d]` extended by 0 on the left and by a constant
/// on the right, with O(1) window sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedSeries {
    prefix: Vec<f64>,
    right: f64,
}

impl PaddedSeries {
    /// Profile with in-range `values` and right padding `right`.
    pub fn new(values: &[f64], right: f64) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in values {
            acc += v;
            prefix.push(acc);
        }
        Self { prefix, right }
    }

    /// Column mean of `y` over `rows`, padded with one on the right.
    pub fn mean_of(y: &Matrix, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("column mean of an empty expert set"));
        }
        let mut sub = Matrix::zeros((rows.len(), y.ncols()));
        for (a, &i) in rows.iter().enumerate() {
            sub.row_mut(a).assign(&y.row(i));
        }
        Ok(Self::new(&column_mean(&sub)?, 1.0))
    }

    /// Number of in-range positions.
    pub fn d(&self) -> usize {
        self.prefix.len() - 1
    }

    /// Value at 1-based position `k`.
    pub fn value(&self, k: i64) -> f64 {
        self.sum(k, k)
    }

    /// `Σ_{k=a}^{b}` over the extended index set (0 when `b < a`).
    pub fn sum(&self, a: i64, b: i64) -> f64 {
        if b < a {
            return 0.0;
        }
        let d = self.d() as i64;
        let lo = a.max(1);
        let hi = b.min(d);
        let inside = if lo <= hi {
            self.prefix[hi as usize] - self.prefix[(lo - 1) as usize]
        } else {
            0.0
        };
        let right_from = a.max(d + 1);
        let right = if right_from <= b {
            (b - right_from + 1) as f64 * self.right
        } else {
            0.0
        };
        inside + right
    }
}

fn clamp_width(width: u64) -> i64 {
    width.clamp(1, MAX_WIDTH) as i64
}

/// Forward-minus-backward window mean difference at position `k`.
pub fn cusum(series: &PaddedSeries, k: i64, width: u64) -> f64 {
    let w = clamp_width(width);
    (series.sum(k, k + w - 1) - series.sum(k - w, k - 1)) / w as f64
}

/// CUSUM whose backward window is shifted one position to the left.
pub fn cusum_shifted(series: &PaddedSeries, k: i64, width: u64) -> f64 {
    let w = clamp_width(width);
    (series.sum(k, k + w - 1) - series.sum(k - w - 1, k - 2)) / w as f64
}

fn ceil_u64(x: f64) -> u64 {
    if !(x < MAX_WIDTH as f64) {
        MAX_WIDTH
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// Window `r̃ = 8(⌈c·32ζ² log(2d/δ)/(|P̄|h²)⌉ ∨ r)` of the oblivious reduction.
pub fn rtilde_cp(p_size: usize, h: f64, r: usize, d: usize, params: &TrisectionParams) -> u64 {
    let z2 = params.zeta * params.zeta;
    let r0 = params.practical_scaling * 32.0 * z2 * (2.0 * d as f64 / params.delta).ln()
        / (p_size as f64 * h * h);
    8u64.saturating_mul(ceil_u64(r0).max(r as u64)).min(MAX_WIDTH)
}

/// Scale `r̃ = 4(⌈r₀⌉^dya ∨ r)` of the reduction with memory.
pub fn rtilde_wm(
    p_size: usize,
    h: f64,
    r: usize,
    d: usize,
    n_scales: usize,
    params: &TrisectionParams,
) -> u64 {
    let z2 = params.zeta * params.zeta;
    let r0 = params.practical_scaling
        * 512.0
        * (4.0 * d as f64 * n_scales as f64 / params.delta).ln()
        * z2
        / (p_size as f64 * h * h);
    let dya = 2f64.powf(r0.log2().ceil());
    let base = if dya > r as f64 { ceil_u64(dya) } else { r as u64 };
    4u64.saturating_mul(base).min(MAX_WIDTH)
}

/// Selected blocks `encode_set({k : Ĉ_{k,r̃} ≥ h/4}, r)` from a prepared mean profile.
pub(crate) fn reduce_cp(
    ybar: &PaddedSeries,
    p_size: usize,
    h: f64,
    r: usize,
    params: &TrisectionParams,
) -> Vec<usize> {
    let d = ybar.d();
    let width = rtilde_cp(p_size, h, r, d, params);
    let hits: Vec<usize> = (1..=d)
        .filter(|&k| cusum(ybar, k as i64, width) >= h / 4.0)
        .collect();
    encode_set(&hits, r)
}

/// Oblivious dimension reduction on sample `y` for the experts `p_bar`.
pub fn dimension_reduction_cp(
    y: &Matrix,
    p_bar: &[usize],
    h: f64,
    r: usize,
    params: &TrisectionParams,
) -> Result<Vec<usize>> {
    let ybar = PaddedSeries::mean_of(y, p_bar)?;
    Ok(reduce_cp(&ybar, p_bar.len(), h, r, params))
}

/// Pooled rows: real experts plus synthetic constant rows.
#[derive(Debug, Clone)]
struct Pool {
    sums: Vec<f64>,
    real: f64,
    ones: f64,
    zeros: f64,
}

impl Pool {
    fn merge(&self, other: &Pool) -> Pool {
        Pool {
            sums: self.sums.iter().zip(&other.sums).map(|(a, b)| a + b).collect(),
            real: self.real + other.real,
            ones: self.ones + other.ones,
            zeros: self.zeros + other.zeros,
        }
    }

    fn series(&self) -> PaddedSeries {
        let total = self.real + self.ones + self.zeros;
        let values: Vec<f64> = self.sums.iter().map(|s| (s + self.ones) / total).collect();
        PaddedSeries::new(&values, (self.real + self.ones) / total)
    }
}

/// Cumulative column sums of the neighbor groups of one sample.
#[derive(Debug, Clone)]
pub struct NeighborSums {
    above: Vec<(Vec<f64>, usize)>,
    below: Vec<(Vec<f64>, usize)>,
    d: usize,
}

impl NeighborSums {
    /// Prepares cumulative sums of `ctx` on sample `sums`.
    pub fn new(sums: &PrefixSums, ctx: &NeighborhoodContext) -> Self {
        let cumulate = |groups: &[Vec<usize>]| {
            let mut acc = vec![0.0; sums.d()];
            let mut count = 0;
            groups
                .iter()
                .filter(|g| !g.is_empty())
                .map(|g| {
                    for (a, s) in acc.iter_mut().zip(sums.column_sums(g)) {
                        *a += s;
                    }
                    count += g.len();
                    (acc.clone(), count)
                })
                .collect::<Vec<_>>()
        };
        Self {
            above: cumulate(&ctx.above),
            below: cumulate(&ctx.below),
            d: sums.d(),
        }
    }

    fn side(&self, upper: bool, budget: f64) -> Pool {
        let cum = if upper { &self.above } else { &self.below };
        let (sums, real, synthetic) = match cum.iter().find(|(_, c)| *c as f64 >= budget) {
            Some((s, c)) => (s.clone(), *c as f64, 0.0),
            None => {
                let (s, c) = cum.last().cloned().unwrap_or((vec![0.0; self.d], 0));
                let missing = (budget - c as f64).ceil().max(1.0);
                (s, c as f64, missing)
            }
        };
        Pool {
            sums,
            real,
            ones: if upper { synthetic } else { 0.0 },
            zeros: if upper { 0.0 } else { synthetic },
        }
    }
}

/// Selected blocks of the reduction with memory from prepared statistics.
pub(crate) fn reduce_wm(
    nb: &NeighborSums,
    ybar: &PaddedSeries,
    p_size: usize,
    h: f64,
    r: usize,
    scales: &[usize],
    params: &TrisectionParams,
) -> Vec<usize> {
    let d = ybar.d();
    let shifted = params.mode == Variant::WmSr;
    let rt = rtilde_wm(p_size, h, r, d, scales.len(), params);
    let prefactor = params.practical_scaling
        * 2048.0
        * (4.0 * d as f64 * scales.len() as f64 / params.delta).ln()
        * params.zeta
        * params.zeta
        / (h * h);
    let mut selected = Vec::new();
    for &r_cp in scales.iter().filter(|&&s| s >= 4 * r && s as u64 <= rt) {
        let budget = |s: usize| prefactor / s as f64;
        let plus = nb.side(true, budget(r_cp)).series();
        let minus = nb.side(false, budget(r_cp)).series();
        let pooled;
        let v_series = if 2 * r_cp as u64 > rt {
            ybar
        } else {
            let b2 = budget(2 * r_cp);
            pooled = nb.side(true, b2).merge(&nb.side(false, b2)).series();
            &pooled
        };
        let w = r_cp as i64;
        let hits: Vec<usize> = (1..=d)
            .filter(|&k| {
                let k = k as i64;
                let lower = if shifted {
                    minus.sum(k - w - 1, k + w - 2)
                } else {
                    minus.sum(k - w, k + w - 1)
                };
                let width = (plus.sum(k - w, k + w - 1) - lower) / (2 * w) as f64;
                let change = if shifted {
                    cusum_shifted(v_series, k, 2 * r_cp as u64)
                } else {
                    cusum(v_series, k, 2 * r_cp as u64)
                };
                width >= h / 16.0 && change >= h / 16.0
            })
            .collect();
        selected = union_sorted(&selected, &encode_set(&hits, r));
    }
    selected
}

/// Dimension reduction with tree memory on sample `y` for the experts `p_bar`
/// of the leaf whose neighbors are `ctx`.
pub fn dimension_reduction_wm(
    y: &Matrix,
    ctx: &NeighborhoodContext,
    p_bar: &[usize],
    h: f64,
    r: usize,
    params: &TrisectionParams,
) -> Result<Vec<usize>> {
    let ybar = PaddedSeries::mean_of(y, p_bar)?;
    let nb = NeighborSums::new(&PrefixSums::new(y), ctx);
    let scales: Vec<usize> = std::iter::successors(Some(1usize), |&s| Some(s * 2))
        .take_while(|&s| s <= y.ncols())
        .collect();
    Ok(reduce_wm(&nb, &ybar, p_bar.len(), h, r, &scales, params))
}
