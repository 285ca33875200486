//! Class-conditional kernel density estimation in the latent space and
//! the ML/MAP decision rules, plus the end-to-end fitting pipeline.
//!
//! Each class keeps its embedded training cloud and a scalar bandwidth.
//! Densities are always handled as log-scores through log-sum-exp, so
//! far-from-cloud queries degrade to −∞ instead of underflowing to 0,
//! and ties resolve deterministically.

use serde::{Deserialize, Serialize};

use crate::embedding::{fit_embedding, select_rank, RankSelection, SpectralEmbedding};
use crate::error::{Error, Result};
use crate::operator::{
    amplitude_lift, class_frequency_matrix, class_normalized_amplitudes, default_rank_tol,
    spectral_decompose, Variant,
};
use crate::survey::{LabeledDataset, SurveySchema, SurveyVector};

/// Smoothing kernel for the latent clouds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// K(u) = (2π)^{−r/2} exp(−‖u‖²/2), full support.
    Gaussian,
    /// K(u) = (r+2)/(2·V_r) · (1−‖u‖²)₊ with V_r the unit-ball volume;
    /// compact support respecting the latent ball.
    Epanechnikov,
}

/// Decision rule: maximum likelihood or prior-weighted MAP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Ml,
    Map,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rule::Ml => write!(f, "ml"),
            Rule::Map => write!(f, "map"),
        }
    }
}

/// Where the class priors come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// π_y = 1/k; MAP then coincides with ML.
    Uniform,
    /// π̂_y = n_y/n from the training labels.
    Empirical,
    /// User-supplied simplex.
    Explicit(Vec<f64>),
}

/// Bandwidth selection policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// h = σ̄ · n^{−1/(r+4)} per class (σ̄ = mean per-dimension sample
    /// standard deviation), floored at `H_MIN`.
    Scott,
    /// Leave-one-out log-likelihood over the grid h_scott·2^j, j ∈ [−3,3].
    CrossValidated,
}

/// Floor protecting collapsed or single-point clouds.
pub const H_MIN: f64 = 1e-3;

/// Absolute score tolerance inside which an argmax counts as tied.
const TIE_TOL: f64 = 1e-12;

/// One class of the fitted model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdeClass {
    pub label: usize,
    pub bandwidth: f64,
    pub prior: f64,
    pub cloud: Vec<Vec<f64>>,
}

/// Per-class KDE mixture over a shared latent dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdeModel {
    pub r: usize,
    pub kernel: Kernel,
    pub classes: Vec<KdeClass>,
}

impl KdeModel {
    pub fn k(&self) -> usize {
        self.classes.len()
    }

    /// Validates cloud shapes, bandwidths, and the prior simplex.
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("model has no classes".into()));
        }
        let mut prior_sum = 0.0;
        for (i, c) in self.classes.iter().enumerate() {
            if c.label != i {
                return Err(Error::Config(format!(
                    "class {i} carries label {}, expected {i}",
                    c.label
                )));
            }
            if c.cloud.is_empty() {
                return Err(Error::Config(format!("class {i} has an empty cloud")));
            }
            if c.bandwidth <= 0.0 {
                return Err(Error::Config(format!(
                    "class {i} has nonpositive bandwidth {}",
                    c.bandwidth
                )));
            }
            if !(c.prior > 0.0 && c.prior <= 1.0) {
                return Err(Error::Config(format!("class {i} has prior {}", c.prior)));
            }
            prior_sum += c.prior;
            for (j, z) in c.cloud.iter().enumerate() {
                if z.len() != self.r {
                    return Err(Error::Data(format!(
                        "class {i} point {j} has dimension {}, expected {}",
                        z.len(),
                        self.r
                    )));
                }
            }
        }
        if (prior_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("priors sum to {prior_sum}, expected 1")));
        }
        Ok(())
    }
}

/// Volume of the r-dimensional unit ball: V_0 = 1, V_1 = 2,
/// V_r = V_{r−2} · 2π/r.
pub fn unit_ball_volume(r: usize) -> f64 {
    match r {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(r - 2) * 2.0 * std::f64::consts::PI / r as f64,
    }
}

/// log Σ exp(x_i), stable under large negative inputs; −∞ when every
/// term is −∞.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Scott-style plug-in bandwidth for one cloud. Returns the bandwidth
/// and whether the `H_MIN` floor was applied (single-point or collapsed
/// clouds always floor).
pub fn bandwidth_scott(cloud: &[Vec<f64>]) -> (f64, bool) {
    let n = cloud.len();
    if n < 2 {
        return (H_MIN, true);
    }
    let r = cloud[0].len();
    let nf = n as f64;
    let mut sigma_sum = 0.0;
    for dim in 0..r {
        let mean: f64 = cloud.iter().map(|z| z[dim]).sum::<f64>() / nf;
        let ss: f64 = cloud.iter().map(|z| (z[dim] - mean).powi(2)).sum();
        sigma_sum += (ss / (nf - 1.0)).sqrt();
    }
    let sigma_bar = sigma_sum / r as f64;
    let h = sigma_bar * nf.powf(-1.0 / (r as f64 + 4.0));
    if h < H_MIN {
        (H_MIN, true)
    } else {
        (h, false)
    }
}

fn log_kernel(kernel: Kernel, r: usize, sq_norm: f64) -> f64 {
    match kernel {
        Kernel::Gaussian => {
            -0.5 * (r as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * sq_norm
        }
        Kernel::Epanechnikov => {
            if sq_norm < 1.0 {
                ((r as f64 + 2.0) / (2.0 * unit_ball_volume(r))).ln() + (1.0 - sq_norm).ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

fn scaled_sq_norm(z: &[f64], w: &[f64], h: f64) -> f64 {
    let inv = 1.0 / h;
    z.iter()
        .zip(w)
        .map(|(a, b)| {
            let u = (a - b) * inv;
            u * u
        })
        .sum()
}

/// log f̂(z|y) = log(1/(n_y h^r)) + LSE over the cloud of log K((z−w)/h).
/// Returns −∞ when z is outside every kernel's support.
pub fn kde_log_density(model: &KdeModel, z: &[f64], y: usize) -> Result<f64> {
    let class = model
        .classes
        .get(y)
        .ok_or_else(|| Error::Config(format!("unknown class {y}; model has {}", model.k())))?;
    if z.len() != model.r {
        return Err(Error::Dimension { expected: model.r, got: z.len() });
    }
    let terms: Vec<f64> = class
        .cloud
        .iter()
        .map(|w| log_kernel(model.kernel, model.r, scaled_sq_norm(z, w, class.bandwidth)))
        .collect();
    let lse = log_sum_exp(&terms);
    if lse == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(lse - (class.cloud.len() as f64).ln() - model.r as f64 * class.bandwidth.ln())
}

/// Highest-scoring class under the rule. Ties within 1e-12 go to the
/// lowest class index; if every score is −∞, falls back to the largest
/// prior (again lowest index on ties).
pub fn classify(model: &KdeModel, z: &[f64], rule: Rule) -> Result<usize> {
    let mut scores = Vec::with_capacity(model.k());
    for y in 0..model.k() {
        let log_f = kde_log_density(model, z, y)?;
        let score = match rule {
            Rule::Ml => log_f,
            Rule::Map => model.classes[y].prior.ln() + log_f,
        };
        scores.push(score);
    }
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        let top_prior = model
            .classes
            .iter()
            .map(|c| c.prior)
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(model
            .classes
            .iter()
            .position(|c| c.prior >= top_prior - TIE_TOL)
            .unwrap());
    }
    Ok(scores.iter().position(|&s| s >= best - TIE_TOL).unwrap())
}

fn loo_log_likelihood(cloud: &[Vec<f64>], h: f64, kernel: Kernel, r: usize) -> f64 {
    let n = cloud.len();
    let norm = -((n as f64 - 1.0).ln()) - r as f64 * h.ln();
    let mut total = 0.0;
    for (i, z) in cloud.iter().enumerate() {
        let terms: Vec<f64> = cloud
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, w)| log_kernel(kernel, r, scaled_sq_norm(z, w, h)))
            .collect();
        let lse = log_sum_exp(&terms);
        if lse == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += lse + norm;
    }
    total
}

/// Bandwidth for one class under the chosen rule. Cross-validation
/// scans h_scott·2^j for j ∈ [−3, 3] and keeps the leave-one-out
/// log-likelihood maximizer (lowest j on ties); it falls back to the
/// Scott value when every grid point scores −∞.
pub fn select_bandwidth(cloud: &[Vec<f64>], kernel: Kernel, rule: BandwidthRule) -> (f64, bool) {
    let (scott, floored) = bandwidth_scott(cloud);
    match rule {
        BandwidthRule::Scott => (scott, floored),
        BandwidthRule::CrossValidated => {
            if cloud.len() < 2 {
                return (scott, floored);
            }
            let r = cloud[0].len();
            let mut best_h = f64::NAN;
            let mut best_ll = f64::NEG_INFINITY;
            for j in -3i32..=3 {
                let h = (scott * 2f64.powi(j)).max(H_MIN);
                let ll = loo_log_likelihood(cloud, h, kernel, r);
                if ll > best_ll {
                    best_ll = ll;
                    best_h = h;
                }
            }
            if best_ll == f64::NEG_INFINITY {
                (scott, floored)
            } else {
                (best_h, best_h <= H_MIN)
            }
        }
    }
}

/// Knobs for the end-to-end fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub variant: Variant,
    /// Additive smoothing for class-normalized profiles.
    pub smoothing: f64,
    /// Relative eigenvalue cutoff; `None` uses 1e-12·k.
    pub rank_tol: Option<f64>,
    pub rank: RankSelection,
    pub kernel: Kernel,
    pub bandwidth: BandwidthRule,
    pub priors: PriorMode,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            variant: Variant::CountBased,
            smoothing: 0.0,
            rank_tol: None,
            rank: RankSelection::FullRank,
            kernel: Kernel::Gaussian,
            bandwidth: BandwidthRule::Scott,
            priors: PriorMode::Uniform,
        }
    }
}

fn resolve_priors(mode: &PriorMode, counts: &[usize], n: usize) -> Result<Vec<f64>> {
    let k = counts.len();
    match mode {
        PriorMode::Uniform => Ok(vec![1.0 / k as f64; k]),
        PriorMode::Empirical => Ok(counts.iter().map(|&c| c as f64 / n as f64).collect()),
        PriorMode::Explicit(p) => {
            if p.len() != k {
                return Err(Error::Dimension { expected: k, got: p.len() });
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("explicit priors sum to {sum}, expected 1")));
            }
            if p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                return Err(Error::Config("explicit priors must lie in (0, 1]".into()));
            }
            Ok(p.clone())
        }
    }
}

/// Full fit: tally → amplitudes → spectrum → embedding → per-class
/// clouds → bandwidths → priors.
pub fn fit_pipeline(
    ds: &LabeledDataset,
    options: &PipelineOptions,
) -> Result<(SpectralEmbedding, KdeModel)> {
    let f = class_frequency_matrix(ds)?;
    let amplitudes = match options.variant {
        Variant::CountBased => amplitude_lift(&f),
        Variant::ClassNormalized => class_normalized_amplitudes(&f, options.smoothing)?,
    };
    let rank_tol = options.rank_tol.unwrap_or_else(|| default_rank_tol(ds.k));
    let spectrum = spectral_decompose(&amplitudes, rank_tol)?;
    let r = select_rank(&spectrum, options.rank)?;
    let embedding = fit_embedding(&spectrum, ds.schema.q(), r)?;

    let mut clouds: Vec<Vec<Vec<f64>>> = vec![Vec::new(); ds.k];
    for (x, &y) in ds.samples.iter().zip(&ds.labels) {
        clouds[y].push(embedding.embed(&ds.schema, x)?);
    }
    let priors = resolve_priors(&options.priors, &ds.class_counts(), ds.n())?;
    let classes = clouds
        .into_iter()
        .enumerate()
        .map(|(label, cloud)| {
            let (bandwidth, _) = select_bandwidth(&cloud, options.kernel, options.bandwidth);
            KdeClass { label, bandwidth, prior: priors[label], cloud }
        })
        .collect();
    let model = KdeModel { r, kernel: options.kernel, classes };
    model.validate()?;
    Ok((embedding, model))
}

/// Embed-then-classify for one raw survey vector.
pub fn predict(
    embedding: &SpectralEmbedding,
    model: &KdeModel,
    schema: &SurveySchema,
    x: &SurveyVector,
    rule: Rule,
) -> Result<usize> {
    let z = embedding.embed(schema, x)?;
    classify(model, &z, rule)
}
