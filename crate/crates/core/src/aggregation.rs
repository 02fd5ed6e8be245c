//! Dyadic grids, question-block encoding and block aggregation.
//!
//! Question indices `k` and block starts `l` are 1-based here, matching the
//! padding convention of [`crate::model::padded_entry`]: a block `[l, l+r)`
//! may run past `d`, in which case the overflow entries count as one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Matrix;

/// Scales `R` and heights `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrids {
    /// Powers of two in `[1, d]`, ascending.
    pub scales: Vec<usize>,
    /// Powers of two in `[ζ²/(nd), 1]`, ascending.
    pub heights: Vec<f64>,
}

/// Builds `R = {2^k} ∩ [1,d]` and `H = {2^k} ∩ [ζ²/(nd), 1]`.
pub fn build_grids(n: usize, d: usize, zeta: f64) -> Result<DyadicGrids> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be at least 1"));
    }
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(invalid(format!("zeta must be positive, got {zeta}")));
    }
    let scales = std::iter::successors(Some(1usize), |&r| r.checked_mul(2))
        .take_while(|&r| r <= d)
        .collect();
    let low = zeta * zeta / (n as f64 * d as f64);
    let mut heights = Vec::new();
    if low <= 1.0 {
        let mut e = low.log2().ceil() as i32;
        while 2f64.powi(e) < low {
            e += 1;
        }
        while 2f64.powi(e - 1) >= low {
            e -= 1;
        }
        heights = (e..=0).map(|k| 2f64.powi(k)).collect();
    }
    Ok(DyadicGrids { scales, heights })
}

/// Block starts `Q_r = {1, r+1, …, ⌊d/r⌋r+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid {
    /// Scale.
    pub r: usize,
    /// Block starts (1-based).
    pub starts: Vec<usize>,
}

impl BlockGrid {
    /// Grid of scale `r` over `d` questions.
    pub fn new(d: usize, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(invalid("scale must be positive"));
        }
        Ok(Self {
            r,
            starts: (0..=d / r).map(|j| j * r + 1).collect(),
        })
    }

    /// True when `l` is a start of this grid.
    pub fn contains(&self, l: usize) -> bool {
        l >= 1 && (l - 1) % self.r == 0 && l <= *self.starts.last().expect("grid is nonempty")
    }
}

/// `Q = {l ∈ Q_r : [l, l+r) ∩ D ≠ ∅}`, sorted ascending. `D` holds 1-based questions.
pub fn encode_set(questions: &[usize], r: usize) -> Vec<usize> {
    let mut blocks: Vec<usize> = questions
        .iter()
        .filter(|&&k| k >= 1)
        .map(|&k| (k - 1) / r * r + 1)
        .collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks
}

/// Sorted union of two sorted block sets.
pub fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// Block-aggregated observations over experts `P` and block starts `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedMatrix {
    /// `|P| × |Q|` entries.
    pub z: Matrix,
    /// Experts (0-based), one per row.
    pub experts: Vec<usize>,
    /// Block starts (1-based), one per column.
    pub blocks: Vec<usize>,
    /// Scale.
    pub r: usize,
}

/// Row prefix sums of a sample, for O(1) padded window sums.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    prefix: Matrix,
}

impl PrefixSums {
    /// Prefix sums of every row of `y`.
    pub fn new(y: &Matrix) -> Self {
        let (n, d) = y.dim();
        let mut prefix = Matrix::zeros((n, d + 1));
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..d {
                acc += y[[i, k]];
                prefix[[i, k + 1]] = acc;
            }
        }
        Self { prefix }
    }

    /// Number of questions.
    pub fn d(&self) -> usize {
        self.prefix.ncols() - 1
    }

    /// `Σ_{k=l}^{l+r-1}` of row `i` with padded ones beyond `d` (`l ≥ 1`).
    pub fn block_sum(&self, i: usize, l: usize, r: usize) -> f64 {
        let d = self.d();
        let end = (l + r - 1).min(d);
        let inside = if l <= d {
            self.prefix[[i, end]] - self.prefix[[i, l - 1]]
        } else {
            0.0
        };
        let overflow = (l + r - 1).saturating_sub(d.max(l - 1)) as f64;
        inside + overflow
    }

    /// Column sums over `rows` restricted to `[1, d]`.
    pub fn column_sums(&self, rows: &[usize]) -> Vec<f64> {
        let d = self.d();
        let mut out = vec![0.0; d];
        for &i in rows {
            for k in 0..d {
                out[k] += self.prefix[[i, k + 1]] - self.prefix[[i, k]];
            }
        }
        out
    }
}

/// Aggregates `y` over experts `p` and blocks `q` at scale `r`.
pub fn encode_matrix(y: &Matrix, p: &[usize], q: &[usize], r: usize) -> Result<AggregatedMatrix> {
    encode_prefix(&PrefixSums::new(y), p, q, r)
}

/// [`encode_matrix`] from precomputed prefix sums.
pub fn encode_prefix(sums: &PrefixSums, p: &[usize], q: &[usize], r: usize) -> Result<AggregatedMatrix> {
    let grid = BlockGrid::new(sums.d(), r)?;
    if let Some(&bad) = q.iter().find(|&&l| !grid.contains(l)) {
        return Err(invalid(format!("block start {bad} is not on the scale-{r} grid")));
    }
    if let Some(&bad) = p.iter().find(|&&i| i >= sums.prefix.nrows()) {
        return Err(invalid(format!("expert {bad} out of range")));
    }
    let norm = 1.0 / (r as f64).sqrt();
    let mut z = Matrix::zeros((p.len(), q.len()));
    for (a, &i) in p.iter().enumerate() {
        for (b, &l) in q.iter().enumerate() {
            z[[a, b]] = norm * sums.block_sum(i, l, r);
        }
    }
    Ok(AggregatedMatrix {
        z,
        experts: p.to_vec(),
        blocks: q.to_vec(),
        r,
    })
}

/// Arithmetic mean of every column.
pub fn column_mean(a: &Matrix) -> Result<Vec<f64>> {
    let rows = a.nrows();
    if rows == 0 {
        return Err(invalid("column mean of an empty expert set"));
    }
    Ok(a.columns()
        .into_iter()
        .map(|c| c.sum() / rows as f64)
        .collect())
}

impl AggregatedMatrix {
    /// Rows restricted to the listed experts (which must be present).
    pub fn restrict(&self, experts: &[usize]) -> Self {
        let rows: Vec<usize> = experts
            .iter()
            .map(|e| {
                self.experts
                    .iter()
                    .position(|x| x == e)
                    .expect("restriction to a subset of the encoded experts")
            })
            .collect();
        let mut z = Matrix::zeros((rows.len(), self.blocks.len()));
        for (a, &row) in rows.iter().enumerate() {
            z.row_mut(a).assign(&self.z.row(row));
        }
        Self {
            z,
            experts: experts.to_vec(),
            blocks: self.blocks.clone(),
            r: self.r,
        }
    }

    /// `Z − Z̄`, each column centered by its mean.
    pub fn centered(&self) -> Result<Matrix> {
        let mean = column_mean(&self.z)?;
        let mut c = self.z.clone();
        for mut row in c.rows_mut() {
            for (v, m) in row.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        Ok(c)
    }
}
