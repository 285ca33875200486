//! Experiment report data model and canonical serialization.
//!
//! Reports must be byte-identical across runs, platforms, and thread
//! counts for a fixed (config, seed, tool version). Canonical JSON gets
//! there by sorting keys (the serializer's default object ordering),
//! rounding every float to 12 significant digits, and rendering with
//! the shortest-round-trip, locale-independent formatter. Wall-clock
//! timings are therefore written to a separate sidecar file, never into
//! the canonical report.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kde::Rule;
use crate::metrics::Metrics;
use crate::operator::Variant;
use crate::stability::PerturbationReport;
use crate::synth::GeneratorSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Scores for one method configuration on one cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodResult {
    /// "dmm" or "pca_knn".
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    pub metrics: Metrics,
}

/// One sweep point: the generator spec that produced it, every method's
/// scores, and optional perturbation diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellReport {
    pub label: String,
    pub spec: GeneratorSpec,
    pub results: Vec<MethodResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<PerturbationReport>,
}

/// Complete experiment output (timings excluded; see module docs).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: String,
    pub seed: u64,
    /// Echo of the run configuration (variants, rules, baselines, …).
    pub options: Value,
    pub cells: Vec<CellReport>,
}

/// Wall-clock sidecar, one entry per cell plus the total. Never part of
/// the canonical report because durations differ between runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimingSidecar {
    pub total_seconds: f64,
    pub cells: Vec<CellTiming>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellTiming {
    pub label: String,
    pub generate_seconds: f64,
    pub fit_seconds: f64,
    pub evaluate_seconds: f64,
}

/// Rounds to `digits` significant decimal digits (half away from zero
/// at the 10⁻ᵈⁱᵍⁱᵗ scale). Zero and non-finite values pass through.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let shift = digits - 1 - magnitude;
    // Beyond these shifts 10^shift overflows; such magnitudes cannot
    // occur in reports but passing them through keeps the function total.
    if !(-280..=280).contains(&shift) {
        return x;
    }
    let scale = 10f64.powi(shift);
    (x * scale).round() / scale
}

/// Recursively rounds every float in a JSON tree to 12 significant
/// digits. Integer-backed numbers are left untouched.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if !n.is_u64() && !n.is_i64() {
                if let Some(f) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig(f, 12)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serializes any value to canonical JSON: sorted keys, 12-significant-
/// digit floats, two-space indentation, trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value)
        .map_err(|e| Error::Data(format!("report serialization failed: {e}")))?;
    round_floats(&mut tree);
    let body = serde_json::to_string_pretty(&tree)
        .map_err(|e| Error::Data(format!("report rendering failed: {e}")))?;
    Ok(body + "\n")
}

/// Renders the flat CSV summary mirroring the published table shapes:
/// one row per (cell, method, variant, rule) with the three headline
/// scores.
pub fn csv_summary(report: &ExperimentReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "experiment",
            "cell",
            "method",
            "variant",
            "rule",
            "accuracy",
            "balanced_accuracy",
            "macro_f1",
        ])
        .map_err(|e| Error::Data(format!("csv write failed: {e}")))?;
    for cell in &report.cells {
        for res in &cell.results {
            let variant = res.variant.map(|v| v.to_string()).unwrap_or_default();
            let rule = res.rule.map(|r| r.to_string()).unwrap_or_default();
            writer
                .write_record([
                    report.experiment.as_str(),
                    cell.label.as_str(),
                    res.method.as_str(),
                    variant.as_str(),
                    rule.as_str(),
                    &format_float(res.metrics.accuracy),
                    &format_float(res.metrics.balanced_accuracy),
                    &format_float(res.metrics.macro_f1),
                ])
                .map_err(|e| Error::Data(format!("csv write failed: {e}")))?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Data(format!("csv finalize failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("csv encoding failed: {e}")))
}

/// Shortest-round-trip rendering of the 12-digit-rounded value,
/// matching the JSON convention so CSV and JSON outputs never disagree.
pub fn format_float(x: f64) -> String {
    let mut buf = ryu_format(round_sig(x, 12));
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(x: f64) -> String {
    serde_json::Number::from_f64(x)
        .map(|n| n.to_string())
        .unwrap_or_else(|| x.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding_keeps_twelve_significant_digits() {
        assert_eq!(round_sig(0.123456789012345, 12), 0.123456789012);
        assert_eq!(round_sig(123456.789012345, 12), 123456.789012);
        assert_eq!(round_sig(-0.999999999999949, 12), -1.0);
        assert_eq!(round_sig(0.0, 12), 0.0);
        assert_eq!(round_sig(1e-300, 12), 1e-300);
        // Values already shorter than 12 digits are unchanged.
        assert_eq!(round_sig(0.25, 12), 0.25);
        assert_eq!(round_sig(3.0, 12), 3.0);
    }

    #[test]
    fn canonical_json_sorts_keys_and_rounds() {
        let value = json!({
            "zeta": 0.1234567890123456,
            "alpha": 1,
            "nested": {"b": [1.0000000000004, 2], "a": true}
        });
        let s = canonical_json(&value).unwrap();
        let alpha = s.find("\"alpha\"").unwrap();
        let nested = s.find("\"nested\"").unwrap();
        let zeta = s.find("\"zeta\"").unwrap();
        assert!(alpha < nested && nested < zeta);
        assert!(s.contains("0.123456789012"));
        assert!(s.contains("1.0,") || s.contains("1.0\n"));
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn canonical_json_is_deterministic() {
        let value = json!({"x": 0.1 + 0.2, "y": [3.3333333333333335]});
        let a = canonical_json(&value).unwrap();
        let b = canonical_json(&value).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_summary_has_one_row_per_result() {
        use crate::metrics::compute_metrics;
        let metrics = compute_metrics(&[0, 1], &[0, 1], 2).unwrap();
        let report = ExperimentReport {
            schema_version: SCHEMA_VERSION,
            tool_version: "test".into(),
            experiment: "S1".into(),
            seed: 7,
            options: json!({}),
            cells: vec![CellReport {
                label: "delta=0.0".into(),
                spec: crate::synth::experiment_plan("S1", 7).unwrap().cells[0].spec.clone(),
                results: vec![
                    MethodResult {
                        method: "dmm".into(),
                        variant: Some(crate::operator::Variant::CountBased),
                        rule: Some(crate::kde::Rule::Ml),
                        metrics: metrics.clone(),
                    },
                    MethodResult {
                        method: "pca_knn".into(),
                        variant: None,
                        rule: None,
                        metrics,
                    },
                ],
                stability: None,
            }],
        };
        let csv = csv_summary(&report).unwrap();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("experiment,cell,method"));
        assert!(lines[1].contains("dmm,count_based,ml,1,1,1"));
        assert!(lines[2].contains("pca_knn,,,1,1,1"));
    }
}
