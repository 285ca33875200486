//! PCA + k-nearest-neighbor reference pipeline.
//!
//! The comparison baseline projects the same normalized one-hot vectors
//! onto their top principal directions (matching the latent budget of
//! the spectral method) and classifies by majority vote among nearest
//! training points. Everything is deterministic: eigen-sign convention
//! shared with the spectral route, distance ties resolved by lowest
//! training index, vote ties by lowest label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{serde_rows, sym_eig, Matrix};
use crate::operator::fix_sign;

/// Principal-component model fitted to mean-centered row vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// d×r_b, column-orthonormal.
    #[serde(with = "serde_rows")]
    pub components: Matrix,
    /// Sample variance explained by each component, descending.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn r_b(&self) -> usize {
        self.components.cols()
    }

    /// Projects one d-vector to the r_b principal coordinates.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.components.rows();
        if x.len() != d {
            return Err(Error::Dimension { expected: d, got: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.tr_matvec(&centered))
    }

    /// Projects every row of an n×d matrix.
    pub fn project_rows(&self, rows: &Matrix) -> Result<Matrix> {
        let n = rows.rows();
        let mut out = Matrix::zeros(n, self.r_b());
        for i in 0..n {
            let p = self.project(rows.row(i))?;
            out.row_mut(i).copy_from_slice(&p);
        }
        Ok(out)
    }
}

/// Fits PCA to the rows of `vectors`, retaining `r_b` components.
///
/// The eigendecomposition runs on the smaller Gram side: the d×d
/// scatter when d ≤ n, otherwise the n×n kernel with eigenvectors
/// lifted back through the data matrix. Components use the shared
/// largest-coordinate-positive sign convention.
pub fn pca_fit(vectors: &Matrix, r_b: usize) -> Result<PcaModel> {
    let n = vectors.rows();
    let d = vectors.cols();
    if n < 2 {
        return Err(Error::Data(format!("PCA needs at least 2 samples, got {n}")));
    }
    if r_b == 0 || r_b > n.min(d) {
        return Err(Error::Config(format!(
            "retained components {r_b} out of range [1, min(n, d) = {}]",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &x) in mean.iter_mut().zip(vectors.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = Matrix::from_fn(n, d, |i, j| vectors[(i, j)] - mean[j]);
    let denom = (n - 1) as f64;

    let mut components = Matrix::zeros(d, r_b);
    let mut variances = Vec::with_capacity(r_b);
    if d <= n {
        let eig = sym_eig(&centered.gram());
        for j in 0..r_b {
            variances.push(eig.values[j].max(0.0) / denom);
            let mut col: Vec<f64> = eig.vectors.col(j);
            fix_sign(&mut col);
            for i in 0..d {
                components[(i, j)] = col[i];
            }
        }
    } else {
        // Kernel route: XᶜXᶜᵀ shares nonzero eigenvalues with the
        // scatter; eigenvector w lifts to the unit direction Xᶜᵀw/√λ.
        let kernel = centered.transpose().gram();
        let eig = sym_eig(&kernel);
        let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        for j in 0..r_b {
            let lambda = eig.values[j].max(0.0);
            if lambda <= 1e-12 * lambda_max || lambda == 0.0 {
                return Err(Error::Numeric(format!(
                    "component {j} lies beyond the numerical rank of the data"
                )));
            }
            variances.push(lambda / denom);
            let w = eig.vectors.col(j);
            let mut col = centered.tr_matvec(&w);
            let inv = 1.0 / lambda.sqrt();
            for x in &mut col {
                *x *= inv;
            }
            fix_sign(&mut col);
            for i in 0..d {
                components[(i, j)] = col[i];
            }
        }
    }
    Ok(PcaModel { mean, components, variances })
}

/// Majority label among the `neighbors` nearest training rows in
/// Euclidean distance. Distance ties resolve toward the lowest training
/// index; vote ties toward the lowest label.
pub fn knn_classify(
    train: &Matrix,
    labels: &[usize],
    query: &[f64],
    neighbors: usize,
) -> Result<usize> {
    let n = train.rows();
    if n == 0 {
        return Err(Error::Data("KNN training set is empty".into()));
    }
    if labels.len() != n {
        return Err(Error::Dimension { expected: n, got: labels.len() });
    }
    if query.len() != train.cols() {
        return Err(Error::Dimension { expected: train.cols(), got: query.len() });
    }
    if neighbors == 0 || neighbors > n {
        return Err(Error::Config(format!(
            "neighbor count {neighbors} out of range [1, {n}]"
        )));
    }
    // Bounded insertion keeps the k best (distance², index) pairs in
    // lexicographic order; ties on distance keep the earlier index.
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(neighbors + 1);
    for i in 0..n {
        let dist: f64 = train
            .row(i)
            .iter()
            .zip(query)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let key = (dist, i);
        if best.len() == neighbors {
            let worst = *best.last().unwrap();
            if key.0.total_cmp(&worst.0).then(key.1.cmp(&worst.1)).is_ge() {
                continue;
            }
        }
        let pos = best
            .binary_search_by(|probe| probe.0.total_cmp(&key.0).then(probe.1.cmp(&key.1)))
            .unwrap_err();
        best.insert(pos, key);
        best.truncate(neighbors);
    }
    let max_label = best.iter().map(|&(_, i)| labels[i]).max().unwrap();
    let mut votes = vec![0usize; max_label + 1];
    for &(_, i) in &best {
        votes[labels[i]] += 1;
    }
    let mut winner = 0;
    for (label, &v) in votes.iter().enumerate() {
        if v > votes[winner] {
            winner = label;
        }
    }
    Ok(winner)
}
