use crate::aggregation::AggregatedMatrix;
use crate::error::{invalid, Result};

use super::{TrisectionParams, TrisectionResult, Variant};

/// Trisection of the experts of `z` around the `gamma`-th smallest statistic
/// `ψ(i) = ⟨Z_i, w/‖w‖₂⟩` (1-based, ties broken by expert index).
pub fn pivot(
    z: &AggregatedMatrix,
    w: &[f64],
    gamma: usize,
    params: &TrisectionParams,
) -> Result<TrisectionResult> {
    let p = z.experts.len();
    if w.len() != z.blocks.len() {
        return Err(invalid("weight length differs from block count"));
    }
    if w.iter().any(|&x| !(x >= 0.0)) {
        return Err(invalid("weights must be nonnegative"));
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(invalid("weight vector is zero"));
    }
    if gamma == 0 || gamma > p {
        return Err(invalid(format!("pivot rank {gamma} outside 1..={p}")));
    }
    let psi: Vec<f64> = z
        .z
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / norm)
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| psi[a].total_cmp(&psi[b]).then(z.experts[a].cmp(&z.experts[b])));
    let center = psi[order[gamma - 1]];

    let spread = (2.0 * p as f64 / params.delta).ln().sqrt();
    let mut t = params.beta_tris * spread;
    let mut t_bar = params.beta_bar_tris * spread;
    if params.mode == Variant::WmSr {
        let ratio = w.iter().fold(0.0f64, |m, &x| m.max(x)) / norm;
        t += 4.0 * ratio;
        t_bar += 8.0 * ratio;
    }

    let mut out = TrisectionResult::default();
    for (a, &e) in z.experts.iter().enumerate() {
        let diff = psi[a] - center;
        if diff > t {
            out.u.push(e);
        }
        if diff > t_bar {
            out.u_bar.push(e);
        }
        if diff < -t {
            out.l.push(e);
        }
        if diff < -t_bar {
            out.l_bar.push(e);
        }
    }
    for set in [&mut out.l, &mut out.u, &mut out.l_bar, &mut out.u_bar] {
        set.sort_unstable();
    }
    Ok(out)
}
