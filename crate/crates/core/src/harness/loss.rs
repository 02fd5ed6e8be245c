use crate::error::{invalid, Result};
use crate::model::{permute_rows, Matrix};
use crate::perm::Permutation;

fn check(m: &Matrix, pi_hat: &Permutation, pi_star: &Permutation) -> Result<()> {
    if pi_hat.len() != m.nrows() || pi_star.len() != m.nrows() {
        return Err(invalid(format!(
            "permutations of sizes {} and {} for {} experts",
            pi_hat.len(),
            pi_star.len(),
            m.nrows()
        )));
    }
    Ok(())
}

fn row_sq_dist(m: &Matrix, a: usize, b: usize) -> f64 {
    m.row(a).iter().zip(m.row(b).iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `‖M_{π̂⁻¹} − M_{π*⁻¹}‖²_F`.
pub fn perm_loss(m: &Matrix, pi_hat: &Permutation, pi_star: &Permutation) -> Result<f64> {
    check(m, pi_hat, pi_star)?;
    let a = permute_rows(m, pi_hat);
    let b = permute_rows(m, pi_star);
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum())
}

/// Largest squared row distance between the two rank-aligned matrices.
pub fn linf_loss(m: &Matrix, pi_hat: &Permutation, pi_star: &Permutation) -> Result<f64> {
    check(m, pi_hat, pi_star)?;
    let (a, b) = (pi_hat.order(), pi_star.order());
    Ok(a.iter()
        .zip(&b)
        .map(|(&i, &j)| row_sq_dist(m, i, j))
        .fold(0.0, f64::max))
}

/// Largest squared distance between two experts ordered inconsistently by
/// `π̂` and `π*`; zero when there is no such pair.
pub fn lerr_loss(m: &Matrix, pi_hat: &Permutation, pi_star: &Permutation) -> Result<f64> {
    check(m, pi_hat, pi_star)?;
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if pi_hat.rank(i) < pi_hat.rank(j) && pi_star.rank(i) > pi_star.rank(j) {
                worst = worst.max(row_sq_dist(m, i, j));
            }
        }
    }
    Ok(worst)
}

/// Squared Frobenius distance between two matrices of equal shape.
pub fn matrix_loss(m_hat: &Matrix, m: &Matrix) -> Result<f64> {
    if m_hat.dim() != m.dim() {
        return Err(invalid("matrices differ in shape"));
    }
    Ok(m_hat.iter().zip(m.iter()).map(|(x, y)| (x - y).powi(2)).sum())
}

/// Expected `perm_loss` of a uniformly random permutation:
/// `(1/n) Σ_r Σ_i ‖S_i − S_r‖²` over the rows `S` of the sorted matrix.
pub fn random_guess_loss(m: &Matrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            total += row_sq_dist(m, a, b);
        }
    }
    total / n as f64
}
