//! Frequency tallies, amplitude matrices, and the class-count Gram route
//! to the operator spectrum.
//!
//! The central object is a d×d density operator, but it is never formed:
//! with a d×k amplitude matrix A the operator is AAᵀ/normalizer, whose
//! nonzero eigenpairs come from the k×k Gram matrix G = AᵀA. Eigenvalues
//! carry over directly and eigenvectors lift as u = Av/√λ, so the whole
//! decomposition costs O(dk² + k³) instead of anything d².
//!
//! Two variants share this machinery:
//! * count-based: entries √F_{i,y}, normalizer tr(AAᵀ) = total count mass,
//!   so classes weigh in proportion to their sample counts;
//! * class-normalized: each column is the unit vector √p̂_y of a smoothed
//!   class profile, normalizer k, so classes weigh equally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::survey::LabeledDataset;

/// Which weighting the amplitude columns encode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CountBased,
    ClassNormalized,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::CountBased => write!(f, "count_based"),
            Variant::ClassNormalized => write!(f, "class_normalized"),
        }
    }
}

/// d×k table of attribute counts per class, with column masses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyMatrix {
    d: usize,
    k: usize,
    counts: Vec<u64>,
    class_masses: Vec<u64>,
}

impl FrequencyMatrix {
    /// Wraps a row-major count table, recomputing column masses.
    pub fn from_counts(d: usize, k: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != d * k {
            return Err(Error::Dimension { expected: d * k, got: counts.len() });
        }
        let mut class_masses = vec![0u64; k];
        for i in 0..d {
            for y in 0..k {
                class_masses[y] += counts[i * k + y];
            }
        }
        Ok(FrequencyMatrix { d, k, counts, class_masses })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn count(&self, i: usize, y: usize) -> u64 {
        self.counts[i * self.k + y]
    }

    /// Column sums s_y.
    pub fn class_masses(&self) -> &[u64] {
        &self.class_masses
    }

    /// Total mass S = Σ_y s_y; equals n·q for tallied data.
    pub fn total_mass(&self) -> u64 {
        self.class_masses.iter().sum()
    }
}

/// Tallies how many samples of each class activate each coordinate,
/// in one O(q)-per-sample pass.
pub fn class_frequency_matrix(ds: &LabeledDataset) -> Result<FrequencyMatrix> {
    if ds.n() == 0 {
        return Err(Error::Data("cannot tally an empty dataset".into()));
    }
    let counts_per_class = ds.class_counts();
    for (y, &c) in counts_per_class.iter().enumerate() {
        if c == 0 {
            return Err(Error::Data(format!(
                "class {y} has no samples; every class needs at least one"
            )));
        }
    }
    let (d, k) = (ds.schema.d(), ds.k);
    let mut counts = vec![0u64; d * k];
    for (sample, &y) in ds.samples.iter().zip(&ds.labels) {
        for pos in sample.active_positions(&ds.schema) {
            counts[pos * k + y] += 1;
        }
    }
    FrequencyMatrix::from_counts(d, k, counts)
}

/// d×k amplitude columns with the variant tag and the normalizer that
/// turns AAᵀ into a unit-trace operator.
#[derive(Clone, Debug)]
pub struct AmplitudeMatrix {
    pub columns: Matrix,
    pub variant: Variant,
    pub smoothing: f64,
    trace_normalizer: f64,
}

impl AmplitudeMatrix {
    /// Wraps prebuilt columns (used for analytic truth profiles and
    /// tests). The count-based normalizer is tr(AAᵀ) = ‖A‖²_F; the
    /// class-normalized normalizer is the column count.
    pub fn from_columns(columns: Matrix, variant: Variant, smoothing: f64) -> Self {
        let trace_normalizer = match variant {
            Variant::CountBased => {
                let f = columns.frobenius();
                f * f
            }
            Variant::ClassNormalized => columns.cols() as f64,
        };
        AmplitudeMatrix { columns, variant, smoothing, trace_normalizer }
    }

    pub fn d(&self) -> usize {
        self.columns.rows()
    }

    pub fn k(&self) -> usize {
        self.columns.cols()
    }

    pub fn trace_normalizer(&self) -> f64 {
        self.trace_normalizer
    }
}

/// Entrywise square root of the counts; the count-based amplitude matrix.
pub fn amplitude_lift(f: &FrequencyMatrix) -> AmplitudeMatrix {
    let k = f.k();
    let columns = Matrix::from_fn(f.d(), k, |i, y| (f.count(i, y) as f64).sqrt());
    AmplitudeMatrix {
        columns,
        variant: Variant::CountBased,
        smoothing: 0.0,
        // Exact integer total, not a float round-trip through the squares.
        trace_normalizer: f.total_mass() as f64,
    }
}

/// Unit columns √p̂_y of the additively smoothed class profiles
/// p̂_y(i) = (F_{i,y} + smoothing) / (s_y + d·smoothing).
pub fn class_normalized_amplitudes(f: &FrequencyMatrix, smoothing: f64) -> Result<AmplitudeMatrix> {
    if smoothing < 0.0 {
        return Err(Error::Config(format!("smoothing must be nonnegative, got {smoothing}")));
    }
    let (d, k) = (f.d(), f.k());
    for (y, &s) in f.class_masses().iter().enumerate() {
        if s == 0 && smoothing == 0.0 {
            return Err(Error::Data(format!(
                "class {y} has zero mass and smoothing is 0; its profile is undefined"
            )));
        }
    }
    let columns = Matrix::from_fn(d, k, |i, y| {
        let num = f.count(i, y) as f64 + smoothing;
        let den = f.class_masses()[y] as f64 + d as f64 * smoothing;
        (num / den).sqrt()
    });
    Ok(AmplitudeMatrix {
        columns,
        variant: Variant::ClassNormalized,
        smoothing,
        trace_normalizer: k as f64,
    })
}

/// G = AᵀA. For class-normalized amplitudes the entries are Bhattacharyya
/// affinities between class profiles, with unit diagonal.
pub fn gram_matrix(a: &AmplitudeMatrix) -> Matrix {
    a.columns.gram()
}

/// Nonzero spectrum of the density operator: descending eigenvalues
/// σ_i summing to one over the full rank, with orthonormal eigenvector
/// columns in the ambient d-dimensional space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorSpectrum {
    pub variant: Variant,
    pub trace_normalizer: f64,
    pub eigenvalues: Vec<f64>,
    #[serde(with = "linalg::serde_rows")]
    pub eigenvectors: Matrix,
    pub rank_tol: f64,
}

impl OperatorSpectrum {
    /// Retained rank s ≤ k.
    pub fn numerical_rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn d(&self) -> usize {
        self.eigenvectors.rows()
    }
}

/// Default relative rank cutoff, scaled by k to track the floating-point
/// error accumulated while forming the k×k Gram matrix.
pub fn default_rank_tol(k: usize) -> f64 {
    1e-12 * k as f64
}

/// Flips the column so its largest-magnitude coordinate (lowest index on
/// ties) is positive. Embeddings are defined up to sign; this pins one.
/// Shared with the PCA baseline so both methods report comparable axes.
pub(crate) fn fix_sign(col: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        for x in col {
            *x = -*x;
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Eigendecomposition via the k×k Gram route; never forms a d×d matrix.
///
/// Eigenvalues of G above `rank_tol`·λ_max survive; each scales to
/// σ = λ/normalizer and lifts to u = Av/√λ. Output order is descending σ
/// with exact ties broken by the sign-fixed eigenvectors' lexicographic
/// order, so equal inputs give bitwise equal output.
pub fn spectral_decompose(a: &AmplitudeMatrix, rank_tol: f64) -> Result<OperatorSpectrum> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::Config(format!("rank_tol must lie in (0, 1), got {rank_tol}")));
    }
    let g = gram_matrix(a);
    let eig = linalg::sym_eig(&g);
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Err(Error::Numeric("degenerate operator: no positive eigenvalues".into()));
    }
    let cutoff = rank_tol * lambda_max;
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::Numeric("degenerate operator: all eigenvalues below tolerance".into()));
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = kept
        .into_iter()
        .map(|i| {
            let lambda = eig.values[i];
            let v = eig.vectors.col(i);
            let mut u = a.columns.matvec(&v);
            let inv = 1.0 / lambda.sqrt();
            for x in &mut u {
                *x *= inv;
            }
            fix_sign(&mut u);
            (lambda / a.trace_normalizer(), u)
        })
        .collect();
    pairs.sort_by(|(sa, ua), (sb, ub)| sb.total_cmp(sa).then_with(|| lex_less(ua, ub)));

    let s = pairs.len();
    let d = a.d();
    let eigenvalues: Vec<f64> = pairs.iter().map(|(sigma, _)| *sigma).collect();
    let eigenvectors = Matrix::from_fn(d, s, |i, j| pairs[j].1[i]);
    Ok(OperatorSpectrum {
        variant: a.variant,
        trace_normalizer: a.trace_normalizer(),
        eigenvalues,
        eigenvectors,
        rank_tol,
    })
}

/// ρv = Σ_i σ_i u_i (u_iᵀ v) straight from the spectrum, O(ds).
pub fn operator_apply(spec: &OperatorSpectrum, v: &[f64]) -> Result<Vec<f64>> {
    let d = spec.d();
    if v.len() != d {
        return Err(Error::Dimension { expected: d, got: v.len() });
    }
    let mut coeffs = spec.eigenvectors.tr_matvec(v);
    for (c, sigma) in coeffs.iter_mut().zip(&spec.eigenvalues) {
        *c *= sigma;
    }
    Ok(spec.eigenvectors.matvec(&coeffs))
}
