use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{permute_rows, Matrix};
use crate::partial::{estimate_wmp, ObservationLog, WmpOutput};
use crate::perm::Permutation;
use crate::rng::Rng;
use crate::tree::BudgetMode;
use crate::trisection::TrisectionParams;

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
pub fn isotonic_regression_1d(v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(invalid("values and weights differ in length"));
    }
    if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid("weights must be positive and finite"));
    }
    // (weighted sum, total weight, length) per pooled block
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(v.len());
    for (&x, &wx) in v.iter().zip(w) {
        blocks.push((x * wx, wx, 1));
        while blocks.len() >= 2 {
            let (s1, w1, c1) = blocks[blocks.len() - 1];
            let (s0, w0, c0) = blocks[blocks.len() - 2];
            if s0 / w0 <= s1 / w1 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().expect("two blocks present") = (s0 + s1, w0 + w1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, wt, c) in blocks {
        out.extend(std::iter::repeat_n(s / wt, c));
    }
    Ok(out)
}

fn isotonic_unit(v: &[f64]) -> Vec<f64> {
    isotonic_regression_1d(v, &vec![1.0; v.len()]).expect("unit weights are valid")
}

fn project_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let fit = isotonic_unit(&row.to_vec());
        row.iter_mut().zip(fit).for_each(|(a, b)| *a = b);
    }
    out
}

fn project_cols(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let fit = isotonic_unit(&col.to_vec());
        col.iter_mut().zip(fit).for_each(|(a, b)| *a = b);
    }
    out
}

fn frobenius(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Largest violation of row or column monotonicity.
fn max_violation(b: &Matrix) -> f64 {
    let (n, d) = b.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in 0..d {
            if k + 1 < d {
                worst = worst.max(b[[i, k]] - b[[i, k + 1]]);
            }
            if i + 1 < n {
                worst = worst.max(b[[i, k]] - b[[i + 1, k]]);
            }
        }
    }
    worst
}

/// Stopping rule of the alternating projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSettings {
    /// Frobenius change between successive iterates that counts as converged.
    pub tol: f64,
    /// Cap on projection cycles.
    pub max_iter: usize,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

impl ProjectionSettings {
    /// Validated settings.
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(invalid("tol must be positive and max_iter at least 1"));
        }
        Ok(Self { tol, max_iter })
    }
}

/// Convergence statistics of a projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// Cycles run.
    pub iterations: usize,
    /// Change fell below the tolerance.
    pub converged: bool,
    /// Last Frobenius change.
    pub last_change: f64,
    /// Monotonicity violation before the final pass.
    pub violation: f64,
}

/// Least-squares projection onto bi-isotonic matrices with entries in `[0,1]`.
///
/// Dykstra's algorithm alternates row and column isotonic fits; a cumulative
/// maximum along rows then columns removes the residual violation and the
/// result is clamped to `[0,1]`.
pub fn project_bi_isotonic(y: &Matrix, settings: &ProjectionSettings) -> Result<(Matrix, ProjectionReport)> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let mut x = y.clone();
    let mut p = Matrix::zeros(y.raw_dim());
    let mut q = Matrix::zeros(y.raw_dim());
    let mut report = ProjectionReport {
        iterations: 0,
        converged: false,
        last_change: f64::INFINITY,
        violation: 0.0,
    };
    for it in 1..=settings.max_iter {
        let a = project_rows(&(&x + &p));
        p = &x + &p - &a;
        let b = project_cols(&(&a + &q));
        q = &a + &q - &b;
        report.iterations = it;
        report.last_change = frobenius(&b, &x);
        x = b;
        if report.last_change < settings.tol {
            report.converged = true;
            break;
        }
    }
    report.violation = max_violation(&x);
    let (n, d) = x.dim();
    for i in 0..n {
        for k in 1..d {
            x[[i, k]] = x[[i, k]].max(x[[i, k - 1]]);
        }
    }
    for k in 0..d {
        for i in 1..n {
            x[[i, k]] = x[[i, k]].max(x[[i - 1, k]]);
        }
    }
    x.mapv_inplace(|v| v.clamp(0.0, 1.0));
    Ok((x, report))
}

/// Plug-in estimate of `M` from a log and a permutation estimate.
///
/// Entry `(i,k)` of the empirical matrix is the sum of the observations at
/// `(i,k)` divided by the log's intensity; rows are sorted by `pi_hat`,
/// projected, and mapped back.
pub fn estimate_matrix(
    log: &ObservationLog,
    pi_hat: &Permutation,
    settings: &ProjectionSettings,
) -> Result<(Matrix, ProjectionReport)> {
    if pi_hat.len() != log.n {
        return Err(invalid("permutation size differs from the log"));
    }
    let mut y = Matrix::zeros((log.n, log.d));
    for rec in &log.records {
        y[[rec.i, rec.k]] += rec.y;
    }
    y /= log.lambda;
    let (b, report) = project_bi_isotonic(&permute_rows(&y, pi_hat), settings)?;
    let mut out = Matrix::zeros(b.raw_dim());
    for e in 0..log.n {
        out.row_mut(e).assign(&b.row(pi_hat.rank(e)));
    }
    Ok((out, report))
}

/// Permutation and matrix estimates from one log.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Permutation estimate from the first half.
    pub ranking: WmpOutput,
    /// Matrix estimate from the second half.
    pub m_hat: Matrix,
    /// Projection statistics.
    pub report: ProjectionReport,
}

/// Splits the log by independent thinning, ranks on one half and
/// reconstructs `M` on the other.
pub fn reconstruct(
    log: &ObservationLog,
    params: &TrisectionParams,
    mode: BudgetMode,
    settings: &ProjectionSettings,
    rng: &mut Rng,
) -> Result<Reconstruction> {
    let (first, second) = log.thin(rng);
    let ranking = estimate_wmp(&first, params, mode, rng)?;
    let (m_hat, report) = estimate_matrix(&second, &ranking.pi_hat, settings)?;
    Ok(Reconstruction {
        ranking,
        m_hat,
        report,
    })
}
