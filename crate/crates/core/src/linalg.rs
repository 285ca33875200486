//! Dense row-major matrices and the small deterministic eigensolvers used
//! by the operator pipeline and its test oracles.
//!
//! Production paths only ever decompose k×k Gram matrices (k = class
//! count), so a cyclic Jacobi sweep is both fast enough and exactly
//! reproducible: no pivot heuristics, no platform-dependent blocking. The
//! same routine doubles as the dense d×d oracle in tests at desk scale.

use crate::error::{Error, Result};

/// Dense row-major matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from row slices; all rows must share one length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    /// Wraps an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for (kk, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = other.row(kk);
                let o_row = out.row_mut(i);
                for (j, &b) in b_row.iter().enumerate() {
                    o_row[j] += a * b;
                }
            }
        }
        out
    }

    /// AᵀA accumulated in one pass over the rows; the result is exactly
    /// symmetric because each entry is stored once and mirrored.
    pub fn gram(&self) -> Matrix {
        let k = self.cols;
        let mut g = Matrix::zeros(k, k);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..k {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..k {
                    g[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..k {
            for b in (a + 1)..k {
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Aᵀv without materializing the transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (j, &a) in self.row(i).iter().enumerate() {
                out[j] += a * vi;
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * a).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest |entry| deviation of AᵀA from the identity; 0 for perfectly
    /// orthonormal columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0f64;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Copy of the first `r` columns.
    pub fn leading_columns(&self, r: usize) -> Matrix {
        assert!(r <= self.cols);
        Matrix::from_fn(self.rows, r, |i, j| self[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a symmetric matrix: `values` descending, paired
/// with orthonormal eigenvector columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Convergence threshold for Jacobi sweeps, relative to ‖A‖_F.
pub const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Upper-triangle entries are annihilated in row order until the
/// off-diagonal Frobenius mass drops below `JACOBI_TOL`·‖A‖_F. Rotation
/// order is fixed, so results are bitwise reproducible for equal inputs.
pub fn sym_eig(a: &Matrix) -> SymEig {
    assert_eq!(a.rows(), a.cols(), "sym_eig needs a square matrix");
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let norm = a.frobenius();
    if norm > 0.0 {
        let tol = JACOBI_TOL * norm;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += 2.0 * a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n.saturating_sub(1) {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    // tan of the annihilating rotation, smaller root for
                    // stability (Rutishauser).
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate_sym(&mut a, p, q, c, s, t, apq);
                    rotate_cols(&mut v, p, q, c, s);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    SymEig { values, vectors }
}

/// Applies the symmetric two-sided rotation JᵀAJ in the (p,q) plane,
/// with the diagonal updated by the cancellation-free t·apq form.
fn rotate_sym(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = a.rows();
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = c * aip - s * aiq;
        a[(p, i)] = a[(i, p)];
        a[(i, q)] = s * aip + c * aiq;
        a[(q, i)] = a[(i, q)];
    }
}

/// Applies the right-rotation V ← VJ on columns (p,q).
fn rotate_cols(v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..v.rows() {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = c * vip - s * viq;
        v[(i, q)] = s * vip + c * viq;
    }
}

/// Thin singular value decomposition A = U·diag(σ)·Vᵀ with σ descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD for small matrices with rows ≥ cols.
///
/// Columns are orthogonalized by right rotations; at convergence the
/// column norms are the singular values. Zero singular values leave their
/// U column zero (callers at desk scale only consume σ and V·Uᵀ products
/// for well-conditioned inputs).
pub fn svd_small(a: &Matrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::Dimension { expected: n, got: m });
    }
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius();
    if scale > 0.0 {
        let tol = 1e-15;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n.saturating_sub(1) {
                for q in (p + 1)..n {
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                    for i in 0..m {
                        let ap = a[(i, p)];
                        let aq = a[(i, q)];
                        alpha += ap * ap;
                        beta += aq * aq;
                        gamma += ap * aq;
                    }
                    if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                    let t = sign / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate_cols(&mut a, p, q, c, s);
                    rotate_cols(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let u = Matrix::from_fn(m, n, |i, j| {
        let col = order[j];
        if sigma[col] > 0.0 {
            a[(i, col)] / sigma[col]
        } else {
            0.0
        }
    });
    let v = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    sigma = order.iter().map(|&j| sigma[j]).collect();
    Ok(Svd { u, sigma, v })
}

/// Serde adapter rendering a [`Matrix`] as a nested row-major array.
pub mod serde_rows {
    use super::Matrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..m.rows()).map(|i| m.row(i)).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(Matrix::from_vec(r, c, rows.into_iter().flatten().collect()))
    }
}

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix.
pub fn spectral_norm_sym(a: &Matrix) -> f64 {
    sym_eig(a)
        .values
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Spectral norm of a rectangular matrix via the eigenvalues of AᵀA
/// (or AAᵀ when that side is smaller).
pub fn spectral_norm(a: &Matrix) -> f64 {
    let g = if a.cols() <= a.rows() {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let lambda = sym_eig(&g).values.first().copied().unwrap_or(0.0);
    lambda.max(0.0).sqrt()
}
