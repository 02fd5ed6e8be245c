//! Permutation estimation for noisy, partially observed bi-isotonic matrices.
//!
//! An `n × d` matrix `M` with entries in `[0, 1]` is observed through noise.
//! Its rows (experts) are unknown-permuted copies of a matrix that is
//! nondecreasing along rows and columns. The crate recovers the row order with
//! hierarchical sorting trees built from repeated trisections, reconstructs
//! `M`, and provides baselines, instance generators and Monte-Carlo tooling.
//!
//! Module map:
//! - [`model`]: problem instances, noise, padding convention, generators.
//! - [`aggregation`]: dyadic grids, block encoding and aggregation.
//! - [`trisection`]: pivots, CUSUM dimension reduction, PCA weights and the
//!   double trisection.
//! - [`tree`]: sorting tree, block sort, tree sort and the named estimators.
//! - [`partial`]: Poisson observation logs and their reduction.
//! - [`estimation`]: matrix reconstruction, Borda count, pairwise estimator.
//! - [`harness`]: losses, lemma checks, experiment runner.

pub mod aggregation;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod model;
pub mod partial;
pub mod perm;
pub mod rng;
pub mod tree;
pub mod trisection;

pub use error::{Error, Result};
pub use model::{Matrix, NoiseSpec, ProblemInstance};
pub use perm::Permutation;
pub use trisection::{TrisectionParams, Variant};
