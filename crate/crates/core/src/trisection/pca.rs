use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatedMatrix;
use crate::error::{invalid, Error, Result};
use crate::model::Matrix;

use super::TrisectionParams;

/// Shifted power-iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSettings {
    /// Tolerance on the relative change of the Rayleigh quotient.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for PowerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Leading eigenvector of `A = CCᵀ − ½DDᵀ` with `C = Z1 − Z̄1` and
/// `D = C − (Z2 − Z̄2)`, normalized so its largest-magnitude entry is positive.
pub fn pca_direction(
    z1: &AggregatedMatrix,
    z2: &AggregatedMatrix,
    settings: &PowerSettings,
) -> Result<Vec<f64>> {
    if z1.z.dim() != z2.z.dim() {
        return Err(invalid("PCA samples differ in shape"));
    }
    let m = z1.z.nrows();
    if m == 0 {
        return Err(invalid("PCA on an empty expert set"));
    }
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let c = z1.centered()?;
    let d = &c - &z2.centered()?;
    let a: Matrix = c.dot(&c.t()) - 0.5 * d.dot(&d.t());
    leading_eigenvector(&a, settings)
}

fn leading_eigenvector(a: &Matrix, settings: &PowerSettings) -> Result<Vec<f64>> {
    let m = a.nrows();
    let sigma = a
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * ((i + 1) as f64).sin()).collect();
    normalize(&mut v);
    if sigma == 0.0 {
        return Ok(sign_normalized(v));
    }
    let mut rayleigh = f64::NAN;
    for _ in 0..settings.max_iter {
        let mut next: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| a[[i, j]] * v[j]).sum::<f64>() + sigma * v[i])
            .collect();
        let rq: f64 = next.iter().zip(&v).map(|(x, y)| x * y).sum();
        if normalize(&mut next) == 0.0 {
            return Ok(sign_normalized(v));
        }
        v = next;
        if (rq - rayleigh).abs() <= settings.tol * rq.abs().max(f64::MIN_POSITIVE) {
            return Ok(sign_normalized(v));
        }
        rayleigh = rq;
    }
    Err(Error::NumericNonconvergence {
        iterations: settings.max_iter,
    })
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn sign_normalized(mut v: Vec<f64>) -> Vec<f64> {
    let lead = v.iter().fold(0.0f64, |best, &x| if x.abs() > best.abs() { x } else { best });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// `ŵ⁺_l = |ẑ_l|·1{|ẑ_l| ≥ 2ζ√(2 log(2|Q|/δ))}` with `ẑ = v̂ᵀ(Z3 − Z̄3)`.
pub fn threshold_weights(
    v: &[f64],
    z3: &AggregatedMatrix,
    params: &TrisectionParams,
) -> Result<Vec<f64>> {
    if v.len() != z3.z.nrows() {
        return Err(invalid("direction length differs from expert count"));
    }
    let c = z3.centered()?;
    let q = z3.blocks.len();
    let cut = 2.0 * params.zeta * (2.0 * (2.0 * q as f64 / params.delta).ln()).sqrt();
    Ok((0..q)
        .map(|l| {
            let zl: f64 = v.iter().zip(c.column(l)).map(|(a, b)| a * b).sum();
            if zl.abs() >= cut {
                zl.abs()
            } else {
                0.0
            }
        })
        .collect())
}
