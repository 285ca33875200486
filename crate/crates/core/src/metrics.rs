//! Classification quality measures over integer label vectors.
//!
//! All three scores are computed from one confusion pass:
//! * accuracy — fraction of exact matches;
//! * balanced accuracy — mean per-class recall over classes that occur
//!   in the truth (absent classes are excluded, so a missing class
//!   neither rewards nor punishes);
//! * macro-F1 — unweighted mean of per-class F1 over all k classes,
//!   where a class with zero predicted and zero actual positives
//!   contributes F1 = 0 (the conservative convention, keeping scores
//!   comparable across cells with different effective class counts).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub macro_f1: f64,
    /// `confusion[t][p]` counts samples with truth t predicted as p.
    pub confusion: Vec<Vec<u64>>,
}

/// Scores predictions against ground truth for a k-class problem.
pub fn compute_metrics(predictions: &[usize], truth: &[usize], k: usize) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::Dimension { expected: truth.len(), got: predictions.len() });
    }
    if truth.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    if k == 0 {
        return Err(Error::Config("class count must be positive".into()));
    }
    let mut confusion = vec![vec![0u64; k]; k];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(Error::Data(format!(
                "label out of range: prediction {p}, truth {t}, k = {k}"
            )));
        }
        confusion[t][p] += 1;
    }
    let n = truth.len() as f64;
    let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / n;

    let mut recall_sum = 0.0;
    let mut present = 0usize;
    let mut f1_sum = 0.0;
    for c in 0..k {
        let actual: u64 = confusion[c].iter().sum();
        let predicted: u64 = (0..k).map(|t| confusion[t][c]).sum();
        let tp = confusion[c][c];
        if actual > 0 {
            recall_sum += tp as f64 / actual as f64;
            present += 1;
        }
        // F1 = 2tp / (actual + predicted); zero denominator means the
        // class appeared nowhere, which scores 0 by convention.
        let denom = actual + predicted;
        if denom > 0 {
            f1_sum += 2.0 * tp as f64 / denom as f64;
        }
    }
    if present == 0 {
        return Err(Error::Data("no class present in the truth labels".into()));
    }
    Ok(Metrics {
        accuracy,
        balanced_accuracy: recall_sum / present as f64,
        macro_f1: f1_sum / k as f64,
        confusion,
    })
}
