//! Distances between class profiles, principal angles between embedding
//! subspaces, and numeric evaluation of the perturbation bounds.
//!
//! Everything here turns an inequality into checkable numbers: given a
//! truth model and an empirical refit, the report carries the measured
//! subspace rotation next to each bound that is supposed to dominate it.
//! Dense d×d operators appear only in this analysis path (desk scale);
//! production fitting never forms them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::operator::{default_rank_tol, spectral_decompose, AmplitudeMatrix, Variant};

const SIMPLEX_TOL: f64 = 1e-9;

fn check_simplex(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| x < 0.0) {
        return Err(Error::Data(format!("{name} has negative entries")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Data(format!("{name} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Bhattacharyya affinity Σ √(p_i q_i) ∈ [0,1]; 1 iff p = q, 0 iff the
/// supports are disjoint.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), got: q.len() });
    }
    check_simplex("first argument", p)?;
    check_simplex("second argument", q)?;
    let bc: f64 = p.iter().zip(q).map(|(&a, &b)| (a * b).sqrt()).sum();
    Ok(bc.clamp(0.0, 1.0))
}

/// Hellinger distance √(1 − BC(p,q)) ∈ [0,1].
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    let bc = bhattacharyya(p, q)?;
    Ok((1.0 - bc).max(0.0).sqrt())
}

const ORTHONORMAL_TOL: f64 = 1e-8;

/// Sines of the principal angles between the column spans of two d×r
/// orthonormal matrices, sorted descending (so the first entry is the
/// spectral norm of sinΘ). Computed as the singular values of the
/// projection residual U2 − U1(U1ᵀU2), which resolves near-zero angles
/// to machine precision — the cosine route loses everything below √ε to
/// cancellation in √(1 − cos²).
pub fn principal_angle_sines(u1: &Matrix, u2: &Matrix) -> Result<Vec<f64>> {
    if u1.rows() != u2.rows() || u1.cols() != u2.cols() {
        return Err(Error::Dimension { expected: u1.cols(), got: u2.cols() });
    }
    for (side, u) in [("first", u1), ("second", u2)] {
        let defect = u.orthonormality_defect();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::Numeric(format!(
                "{side} basis is not column-orthonormal (defect {defect:.3e})"
            )));
        }
    }
    let residual = u2.sub(&u1.matmul(&u1.transpose().matmul(u2)));
    let svd = linalg::svd_small(&residual)?;
    let mut sines: Vec<f64> = svd.sigma.iter().map(|&s| s.clamp(0.0, 1.0)).collect();
    sines.sort_by(|a, b| b.total_cmp(a));
    Ok(sines)
}

/// ‖sinΘ‖₂: the largest principal-angle sine.
pub fn sin_theta_norm(u1: &Matrix, u2: &Matrix) -> Result<f64> {
    Ok(principal_angle_sines(u1, u2)?[0])
}

/// The subspace-rotation bound ‖E‖₂ / gap.
pub fn davis_kahan_bound(perturbation_norm: f64, gap: f64) -> Result<f64> {
    if gap <= 0.0 {
        return Err(Error::Config(format!(
            "subspace bound needs a positive spectral gap, got {gap}"
        )));
    }
    if perturbation_norm < 0.0 {
        return Err(Error::Config("perturbation norm must be nonnegative".into()));
    }
    Ok(perturbation_norm / gap)
}

/// High-probability amplitude deviation level
/// ε = √(k·d·ln(4dk/δ) / (4·p_min·n_min)) and whether the positivity
/// transfer condition √(ln(4dk/δ)/(2·n_min)) ≤ p_min/2 holds.
pub fn perturbation_epsilon(
    k: usize,
    d: usize,
    p_min: f64,
    n_min: u64,
    delta: f64,
) -> Result<(f64, bool)> {
    if k < 1 || d < 1 || n_min < 1 {
        return Err(Error::Config("k, d, and n_min must be at least 1".into()));
    }
    if !(p_min > 0.0 && p_min < 1.0) {
        return Err(Error::Config(format!("p_min must lie in (0,1), got {p_min}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("confidence level must lie in (0,1), got {delta}")));
    }
    let log_term = (4.0 * d as f64 * k as f64 / delta).ln();
    let epsilon =
        (k as f64 * d as f64 * log_term / (4.0 * p_min * n_min as f64)).sqrt();
    let condition_ok = (log_term / (2.0 * n_min as f64)).sqrt() <= p_min / 2.0;
    Ok((epsilon, condition_ok))
}

/// Operator-level deviation implied by an amplitude deviation ε:
/// (2‖Ψ‖₂ε + ε²)/k.
pub fn operator_perturbation_bound(psi_norm: f64, epsilon: f64, k: usize) -> f64 {
    (2.0 * psi_norm * epsilon + epsilon * epsilon) / k as f64
}

/// Deviation between count-weighted and equal-weighted operators under
/// class weights w: ‖Ψ‖²₂ · max_y |w_y − 1/k|.
pub fn imbalance_deviation_bound(psi_norm_sq: f64, weights: &[f64]) -> Result<f64> {
    check_simplex("class weights", weights)?;
    let k = weights.len() as f64;
    let dev = weights
        .iter()
        .map(|&w| (w - 1.0 / k).abs())
        .fold(0.0f64, f64::max);
    Ok(psi_norm_sq * dev)
}

/// Orthogonal r×r rotation aligning U1 onto U2 (minimizes ‖U1·R − U2‖_F):
/// R = VWᵀ from the SVD U1ᵀU2 = VΣWᵀ.
pub fn procrustes_rotation(u1: &Matrix, u2: &Matrix) -> Result<Matrix> {
    if u1.rows() != u2.rows() || u1.cols() != u2.cols() {
        return Err(Error::Dimension { expected: u1.cols(), got: u2.cols() });
    }
    let m = u1.transpose().matmul(u2);
    let svd = linalg::svd_small(&m)?;
    Ok(svd.u.matmul(&svd.v.transpose()))
}

/// Optional inputs for the report: the minimum per-class sample count
/// behind the empirical operator and the confidence level.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StabilityParams {
    pub n_min: Option<u64>,
    pub delta: f64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams { n_min: None, delta: 0.05 }
    }
}

/// Measured subspace rotation next to every bound that should dominate
/// it. `epsilon`-dependent fields are present only when `n_min` was
/// supplied and the truth profiles are strictly positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub d: usize,
    pub k: usize,
    pub r: usize,
    pub n_min: Option<u64>,
    pub p_min: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub positivity_condition_ok: Option<bool>,
    pub operator_bound: Option<f64>,
    pub empirical_operator_deviation: f64,
    pub gap: f64,
    pub dk_bound: f64,
    pub empirical_sin_theta: f64,
    pub dk_bound_satisfied: bool,
}

fn dense_operator(a: &AmplitudeMatrix) -> Matrix {
    a.columns
        .matmul(&a.columns.transpose())
        .scaled(1.0 / a.trace_normalizer())
}

/// Compares the top-r eigenspaces of a truth operator and an empirical
/// refit: measured sinΘ, the dense operator deviation, the subspace
/// bound deviation/gap (with the truth gap), and — when n_min is known —
/// the theoretical ε and its derived operator bound.
pub fn embedding_stability_report(
    truth: &AmplitudeMatrix,
    empirical: &AmplitudeMatrix,
    r: usize,
    params: &StabilityParams,
) -> Result<PerturbationReport> {
    if truth.variant != Variant::ClassNormalized || empirical.variant != Variant::ClassNormalized {
        return Err(Error::Config(
            "stability report expects class-normalized amplitudes on both sides".into(),
        ));
    }
    if truth.d() != empirical.d() || truth.k() != empirical.k() {
        return Err(Error::Dimension { expected: truth.d(), got: empirical.d() });
    }
    let (d, k) = (truth.d(), truth.k());
    let truth_spec = spectral_decompose(truth, default_rank_tol(k))?;
    let emp_spec = spectral_decompose(empirical, default_rank_tol(k))?;
    if r < 1 || r > truth_spec.numerical_rank() || r > emp_spec.numerical_rank() {
        return Err(Error::Config(format!(
            "rank {r} out of range (truth rank {}, empirical rank {})",
            truth_spec.numerical_rank(),
            emp_spec.numerical_rank()
        )));
    }
    let sigma_r = truth_spec.eigenvalues[r - 1];
    let sigma_next = truth_spec.eigenvalues.get(r).copied().unwrap_or(0.0);
    let gap = sigma_r - sigma_next;
    if gap <= 0.0 {
        return Err(Error::Numeric(format!(
            "truth operator has no spectral gap after position {r}"
        )));
    }

    let u_truth = truth_spec.eigenvectors.leading_columns(r);
    let u_emp = emp_spec.eigenvectors.leading_columns(r);
    let empirical_sin_theta = sin_theta_norm(&u_truth, &u_emp)?;

    let deviation =
        linalg::spectral_norm_sym(&dense_operator(empirical).sub(&dense_operator(truth)));
    let dk_bound = davis_kahan_bound(deviation, gap)?;

    // Minimum truth cell probability: amplitude entries are √p̂.
    let mut p_min = f64::INFINITY;
    for i in 0..d {
        for y in 0..k {
            let p = truth.columns[(i, y)].powi(2);
            p_min = p_min.min(p);
        }
    }

    let (epsilon, condition_ok, operator_bound) = match params.n_min {
        Some(n_min) if p_min > 0.0 => {
            let (eps, ok) = perturbation_epsilon(k, d, p_min, n_min, params.delta)?;
            let psi_norm = linalg::spectral_norm(&truth.columns);
            (Some(eps), Some(ok), Some(operator_perturbation_bound(psi_norm, eps, k)))
        }
        _ => (None, None, None),
    };

    Ok(PerturbationReport {
        d,
        k,
        r,
        n_min: params.n_min,
        p_min,
        delta: params.delta,
        epsilon,
        positivity_condition_ok: condition_ok,
        operator_bound,
        empirical_operator_deviation: deviation,
        gap,
        dk_bound,
        empirical_sin_theta,
        dk_bound_satisfied: empirical_sin_theta <= dk_bound + 1e-12,
    })
}
