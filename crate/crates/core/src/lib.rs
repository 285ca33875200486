//! Density-matrix spectral embeddings for labeled categorical data.
//!
//! The pipeline turns one-hot survey vectors (q categorical blocks, total
//! dimension d) into low-dimensional latent coordinates and classifies them
//! with kernel density estimates:
//!
//! 1. tally class-conditional counts into a d×k frequency matrix,
//! 2. lift counts (or class-normalized probability profiles) entrywise by
//!    the square root into an amplitude matrix X,
//! 3. form the trace-one operator ρ = XXᵀ/tr(XXᵀ) implicitly and compute its
//!    nonzero spectrum from the k×k Gram matrix XᵀX,
//! 4. embed samples by projecting x/√q onto the top-r eigenvectors in O(qr),
//! 5. fit per-class KDEs on the latent clouds and decide by ML or MAP rule.
//!
//! The crate also ships the stability toolbox (Bhattacharyya and Hellinger
//! affinities, principal angles, Davis-Kahan and multinomial perturbation
//! bounds), a seeded synthetic-data generator, a PCA+KNN baseline, and the
//! experiment runner behind the `dmm` command-line tool.

pub mod baselines;
pub mod embedding;
pub mod error;
pub mod kde;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod operator;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stability;
pub mod survey;
pub mod synth;

pub use error::{Error, Result};
