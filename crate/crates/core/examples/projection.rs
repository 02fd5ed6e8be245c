//! Isotonic regression and projection onto bi-isotonic matrices.

use isorank::estimation::{isotonic_regression_1d, project_bi_isotonic, ProjectionSettings};
use isorank::{Matrix, Result};

fn main() -> Result<()> {
    let v = [0.9, 0.1, 0.4, 0.8, 0.6];
    let fit = isotonic_regression_1d(&v, &[1.0; 5])?;
    println!("isotonic fit of {v:?}: {fit:?}");
    let y = Matrix::from_shape_vec((3, 3), vec![0.8, 0.2, 0.9, 0.1, 0.5, 0.3, 1.3, 0.7, -0.1])
        .expect("shape matches");
    let (b, report) = project_bi_isotonic(&y, &ProjectionSettings::default())?;
    println!("projection:\n{b:.4}");
    println!("{report:?}");
    Ok(())
}
