//! Projection of normalized survey vectors onto the dominant eigenspace.
//!
//! A fitted embedding keeps the top-r eigenvector columns U_r. Because a
//! survey vector has exactly q active coordinates, U_rᵀ(x/√q) is the sum
//! of q rows of U_r scaled by 1/√q — O(qr) per sample, with the dense
//! vector never materialized. The image always lies in the unit ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::operator::{OperatorSpectrum, Variant};
use crate::survey::{SurveySchema, SurveyVector};

/// Truncation-level policy for a fitted spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankSelection {
    /// Keep every retained eigenvalue (the default pipeline choice:
    /// preserves all class-discriminative directions, dimension ≤ k).
    FullRank,
    /// Keep dimensions up to the largest consecutive eigenvalue drop.
    Gap,
    /// Keep exactly this many dimensions.
    Fixed(usize),
}

impl Default for RankSelection {
    fn default() -> Self {
        RankSelection::FullRank
    }
}

/// Truncation level under the given strategy.
///
/// `gap` maximizes σ_i − σ_{i+1} over interior positions i (1-based,
/// lowest i on ties) and keeps i dimensions; with a single eigenvalue or
/// an all-equal spectrum no gap exists and the full rank is returned.
pub fn select_rank(spec: &OperatorSpectrum, strategy: RankSelection) -> Result<usize> {
    let s = spec.numerical_rank();
    if s == 0 {
        return Err(Error::Numeric("spectrum retains no positive eigenvalues".into()));
    }
    match strategy {
        RankSelection::FullRank => Ok(s),
        RankSelection::Gap => {
            if s == 1 {
                return Ok(1);
            }
            let mut best_i = 0usize;
            let mut best_gap = 0.0f64;
            for i in 0..s - 1 {
                let gap = spec.eigenvalues[i] - spec.eigenvalues[i + 1];
                if gap > best_gap {
                    best_gap = gap;
                    best_i = i + 1;
                }
            }
            if best_gap > 0.0 {
                Ok(best_i)
            } else {
                Ok(s)
            }
        }
        RankSelection::Fixed(r) => {
            if r >= 1 && r <= s {
                Ok(r)
            } else {
                Err(Error::Config(format!(
                    "fixed rank {r} out of range; spectrum rank is {s}"
                )))
            }
        }
    }
}

/// Top-r eigenvector basis with the metadata needed to embed new samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralEmbedding {
    /// d×r, orthonormal columns in descending eigenvalue order.
    #[serde(with = "linalg::serde_rows")]
    pub basis: Matrix,
    /// Block count of the source schema (for the 1/√q scaling).
    pub q: usize,
    /// Operator variant the basis came from.
    pub variant: Variant,
    /// The r retained eigenvalues.
    pub eigenvalues: Vec<f64>,
}

impl SpectralEmbedding {
    /// Validates shape and column orthonormality before wrapping.
    pub fn from_parts(
        basis: Matrix,
        q: usize,
        variant: Variant,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        if eigenvalues.len() != basis.cols() {
            return Err(Error::Dimension { expected: basis.cols(), got: eigenvalues.len() });
        }
        if q == 0 {
            return Err(Error::Config("block count must be positive".into()));
        }
        let defect = basis.orthonormality_defect();
        if defect > 1e-8 {
            return Err(Error::Numeric(format!(
                "basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(SpectralEmbedding { basis, q, variant, eigenvalues })
    }

    pub fn d(&self) -> usize {
        self.basis.rows()
    }

    pub fn r(&self) -> usize {
        self.basis.cols()
    }

    /// π_r(x) = U_rᵀ(x/√q): sums the q active rows of the basis, O(qr).
    pub fn embed(&self, schema: &SurveySchema, x: &SurveyVector) -> Result<Vec<f64>> {
        if schema.d() != self.d() {
            return Err(Error::Dimension { expected: self.d(), got: schema.d() });
        }
        if x.active().len() != schema.q() || schema.q() != self.q {
            return Err(Error::Dimension { expected: self.q, got: x.active().len() });
        }
        let r = self.r();
        let mut out = vec![0.0; r];
        for pos in x.active_positions(schema) {
            let row = self.basis.row(pos);
            for (o, &b) in out.iter_mut().zip(row) {
                *o += b;
            }
        }
        let inv = 1.0 / (self.q as f64).sqrt();
        for o in &mut out {
            *o *= inv;
        }
        Ok(out)
    }

    /// Embeds every sample of a dataset, preserving order.
    pub fn embed_all(&self, schema: &SurveySchema, xs: &[SurveyVector]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.embed(schema, x)).collect()
    }
}

/// Truncates a spectrum to its first r eigenpairs.
pub fn fit_embedding(spec: &OperatorSpectrum, q: usize, r: usize) -> Result<SpectralEmbedding> {
    let s = spec.numerical_rank();
    if r < 1 || r > s {
        return Err(Error::Config(format!(
            "requested rank {r} out of range; spectrum rank is {s}"
        )));
    }
    SpectralEmbedding::from_parts(
        spec.eigenvectors.leading_columns(r),
        q,
        spec.variant,
        spec.eigenvalues[..r].to_vec(),
    )
}
