//! Helpers shared by the integration tests.
#![allow(dead_code)]

use isorank::model::Matrix;
use isorank::rng::{stream, Rng};
use proptest::prelude::*;

/// Seeded generator for a test.
pub fn rng(seed: u64) -> Rng {
    stream(seed, 0)
}

/// Matrix from row literals.
pub fn mat(rows: &[&[f64]]) -> Matrix {
    let d = rows.first().map_or(0, |r| r.len());
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    Matrix::from_shape_vec((rows.len(), d), flat).unwrap()
}

/// Brute-force bi-isotonicity check written independently of the library.
pub fn monotone(b: &Matrix) -> bool {
    let (n, d) = b.dim();
    (0..n).all(|i| (1..d).all(|k| b[[i, k - 1]] <= b[[i, k]] + 1e-12))
        && (1..n).all(|i| (0..d).all(|k| b[[i - 1, k]] <= b[[i, k]] + 1e-12))
}

/// Random bi-isotonic `n × d` matrix in `[0,1]` built from cumulative sums.
pub fn bi_isotonic_strategy(
    n: std::ops::Range<usize>,
    d: std::ops::Range<usize>,
) -> impl Strategy<Value = Matrix> {
    (n, d).prop_flat_map(|(n, d)| {
        prop::collection::vec(0.0f64..1.0, n * d).prop_map(move |raw| {
            let mut m = Matrix::from_shape_vec((n, d), raw).unwrap();
            for i in 0..n {
                for k in 0..d {
                    let left = if k > 0 { m[[i, k - 1]] } else { 0.0 };
                    let up = if i > 0 { m[[i - 1, k]] } else { 0.0 };
                    m[[i, k]] = left.max(up) + m[[i, k]];
                }
            }
            let top = m.iter().cloned().fold(0.0, f64::max).max(1e-9);
            m.mapv(|v| v / top)
        })
    })
}

/// Squared Frobenius distance.
pub fn frob2(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Restricted-growth strings enumerate every set partition of `0..m`.
pub fn partitions(m: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        let top = prefix.iter().copied().max().map_or(0, |x| x + 1);
        for b in 0..=top {
            prefix.push(b);
            grow(prefix, m, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), m, &mut out);
    out
}

/// Weighted least squares over a partial order with values in `[0, 1]`.
///
/// The unbounded optimum takes the weighted mean of the data on each of its
/// level sets and the bounded optimum is its clamp, so the best feasible
/// clamped block-mean candidate is optimal.
pub fn brute_force_fit(v: &[f64], w: &[f64], feasible: impl Fn(&[f64]) -> bool) -> Vec<f64> {
    let m = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for labels in partitions(m) {
        let blocks = labels.iter().copied().max().unwrap_or(0) + 1;
        let mut num = vec![0.0; blocks];
        let mut den = vec![0.0; blocks];
        for t in 0..m {
            num[labels[t]] += w[t] * v[t];
            den[labels[t]] += w[t];
        }
        let fit: Vec<f64> = labels.iter().map(|&b| (num[b] / den[b]).clamp(0.0, 1.0)).collect();
        if !feasible(&fit) {
            continue;
        }
        let cost: f64 = (0..m).map(|t| w[t] * (fit[t] - v[t]).powi(2)).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-15) {
            best = Some((cost, fit));
        }
    }
    best.expect("constant fit is feasible").1
}

/// Nondecreasing up to rounding.
pub fn nondecreasing(x: &[f64]) -> bool {
    x.windows(2).all(|p| p[0] <= p[1] + 1e-12)
}

/// Least-squares projection onto bi-isotonic matrices with entries in `[0, 1]`.
pub fn oracle_projection(y: &Matrix) -> Matrix {
    let (n, d) = y.dim();
    let v: Vec<f64> = y.iter().copied().collect();
    let fit = brute_force_fit(&v, &vec![1.0; n * d], |x| {
        monotone(&Matrix::from_shape_vec((n, d), x.to_vec()).unwrap())
    });
    Matrix::from_shape_vec((n, d), fit).unwrap()
}
