//! Experiment orchestration: named sweeps or custom generator specs →
//! datasets → fitted pipelines → metrics → canonical report files.
//!
//! Cells run in parallel (thread count capped by the DMM_THREADS
//! environment variable), but every cell is seeded independently and
//! assembly is sequential in cell order, so the report bytes never
//! depend on scheduling. Wall-clock timings go to a sidecar file to
//! keep the main report byte-reproducible.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::baselines::{knn_classify, pca_fit};
use crate::error::{Error, Result};
use crate::kde::{classify, fit_pipeline, PipelineOptions, PriorMode, Rule};
use crate::linalg::Matrix;
use crate::metrics::compute_metrics;
use crate::operator::{class_frequency_matrix, class_normalized_amplitudes, Variant};
use crate::report::{
    csv_summary, canonical_json, CellReport, CellTiming, ExperimentReport, MethodResult,
    TimingSidecar, SCHEMA_VERSION,
};
use crate::stability::{embedding_stability_report, StabilityParams};
use crate::survey::LabeledDataset;
use crate::synth::{
    experiment_plan, make_profiles, sample_dataset, truth_amplitudes, ExperimentPlan,
    GeneratorSpec, PlanCell,
};
use crate::rng::derive_seed;

/// Baseline neighbor count (clamped to the training size for tiny
/// custom cells so small smoke runs remain valid).
pub const KNN_NEIGHBORS: usize = 15;

/// Which methods and diagnostics a run evaluates.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub variants: Vec<Variant>,
    pub rules: Vec<Rule>,
    pub baselines: bool,
    pub stability: bool,
}

impl RunOptions {
    /// Per-experiment defaults: the prior-imbalance sweep (S4) reports
    /// both decision rules; the others default to the likelihood rule.
    /// Baselines are always on by default.
    pub fn default_for(experiment: &str) -> RunOptions {
        RunOptions {
            variants: vec![Variant::CountBased],
            rules: if experiment == "S4" { vec![Rule::Ml, Rule::Map] } else { vec![Rule::Ml] },
            baselines: true,
            stability: false,
        }
    }
}

/// What to run: a named standing experiment or a custom spec file.
#[derive(Clone, Debug)]
pub enum ExperimentSource {
    Named(String),
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: ExperimentSource,
    /// Base seed; `None` keeps the default (42) for named plans and the
    /// embedded seed for custom spec files.
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub options: RunOptions,
}

pub const DEFAULT_SEED: u64 = 42;

/// Resolves the config into a concrete plan.
pub fn build_plan(config: &RunConfig) -> Result<ExperimentPlan> {
    match &config.source {
        ExperimentSource::Named(name) => {
            experiment_plan(name, config.seed.unwrap_or(DEFAULT_SEED))
        }
        ExperimentSource::File(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| {
                Error::Config(format!("{}: invalid generator spec: {e}", path.display()))
            })?;
            if let Some(seed) = config.seed {
                spec.seed = seed;
            }
            spec.validate()?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".to_string());
            Ok(ExperimentPlan {
                name,
                cells: vec![PlanCell { label: "custom".into(), spec }],
            })
        }
    }
}

/// Runs the resolved plan and assembles the report. Public entry point
/// used by both the CLI and the test harness.
pub fn run(config: &RunConfig) -> Result<(ExperimentReport, TimingSidecar)> {
    let plan = build_plan(config)?;
    let base_seed = match &config.source {
        ExperimentSource::Named(_) => config.seed.unwrap_or(DEFAULT_SEED),
        ExperimentSource::File(_) => plan.cells[0].spec.seed,
    };
    let (report, timings) = run_plan(&plan, base_seed, &config.options)?;
    if let Some(dir) = &config.out_dir {
        write_outputs(dir, &report, &timings)?;
    }
    Ok((report, timings))
}

/// Runs every cell of a plan in parallel and assembles results in cell
/// order.
pub fn run_plan(
    plan: &ExperimentPlan,
    seed: u64,
    options: &RunOptions,
) -> Result<(ExperimentReport, TimingSidecar)> {
    if options.variants.is_empty() || options.rules.is_empty() {
        return Err(Error::Config("need at least one variant and one rule".into()));
    }
    let started = Instant::now();
    let pool = build_pool()?;
    let outcomes: Vec<Result<(CellReport, CellTiming)>> = pool.install(|| {
        plan.cells
            .par_iter()
            .map(|cell| {
                run_cell(cell, options).map_err(|e| contextualize(e, &cell.label))
            })
            .collect()
    });
    let mut cells = Vec::with_capacity(outcomes.len());
    let mut cell_timings = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let (cell, timing) = outcome?;
        cells.push(cell);
        cell_timings.push(timing);
    }
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: plan.name.clone(),
        seed,
        options: json!({
            "variants": options.variants,
            "rules": options.rules,
            "baselines": if options.baselines { "pca_knn" } else { "none" },
            "stability": options.stability,
            "pipeline": {
                "kernel": "gaussian",
                "bandwidth": "scott",
                "priors": "empirical",
                "rank": "full_rank",
                "smoothing": 0.0,
            },
        }),
        cells,
    };
    let timings = TimingSidecar {
        total_seconds: started.elapsed().as_secs_f64(),
        cells: cell_timings,
    };
    Ok((report, timings))
}

/// Writes report.json, summary.csv, and timings.json into `dir`.
pub fn write_outputs(
    dir: &Path,
    report: &ExperimentReport,
    timings: &TimingSidecar,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, canonical_json(report)?)?;
    std::fs::write(dir.join("summary.csv"), csv_summary(report)?)?;
    std::fs::write(dir.join("timings.json"), canonical_json(timings)?)?;
    Ok(report_path)
}

fn build_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("DMM_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| Error::Config(format!("DMM_THREADS must be a positive integer, got {raw:?}")))?;
        if n == 0 {
            return Err(Error::Config("DMM_THREADS must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool construction failed: {e}")))
}

/// Prefixes errors with the failing cell for diagnosis; config errors
/// keep their exit-code class.
fn contextualize(e: Error, label: &str) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("cell {label}: {m}")),
        other => Error::Data(format!("cell {label}: {other}")),
    }
}

/// Dense n×d matrix of normalized one-hot rows x/√q.
fn survey_rows(ds: &LabeledDataset) -> Matrix {
    let n = ds.n();
    let d = ds.schema.d();
    let scale = 1.0 / (ds.schema.q() as f64).sqrt();
    let mut rows = Matrix::zeros(n, d);
    for (i, x) in ds.samples.iter().enumerate() {
        for pos in x.active_positions(&ds.schema) {
            rows[(i, pos)] = scale;
        }
    }
    rows
}

fn run_cell(cell: &PlanCell, options: &RunOptions) -> Result<(CellReport, CellTiming)> {
    let spec = &cell.spec;
    let t0 = Instant::now();
    let profiles = make_profiles(spec)?;
    let train = sample_dataset(&profiles, &spec.priors, spec.n_train, derive_seed(spec.seed, 0))?;
    let test = sample_dataset(&profiles, &spec.priors, spec.n_test, derive_seed(spec.seed, 1))?;
    let generate_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    // One fit per variant; the MAP rule needs class priors, which the
    // likelihood rule ignores, so models always carry empirical priors.
    let mut fitted = Vec::with_capacity(options.variants.len());
    for &variant in &options.variants {
        let opts = PipelineOptions {
            variant,
            priors: PriorMode::Empirical,
            ..PipelineOptions::default()
        };
        fitted.push((variant, fit_pipeline(&train, &opts)?));
    }
    let pca = if options.baselines {
        let train_rows = survey_rows(&train);
        let model = pca_fit(&train_rows, train.k)?;
        let projected = model.project_rows(&train_rows)?;
        Some((model, projected))
    } else {
        None
    };
    let fit_seconds = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut results = Vec::new();
    for (variant, (embedding, kde)) in &fitted {
        let latent: Vec<Vec<f64>> = test
            .samples
            .iter()
            .map(|x| embedding.embed(&test.schema, x))
            .collect::<Result<_>>()?;
        for &rule in &options.rules {
            let predictions: Vec<usize> = latent
                .iter()
                .map(|z| classify(kde, z, rule))
                .collect::<Result<_>>()?;
            results.push(MethodResult {
                method: "dmm".into(),
                variant: Some(*variant),
                rule: Some(rule),
                metrics: compute_metrics(&predictions, &test.labels, test.k)?,
            });
        }
    }
    if let Some((model, projected_train)) = &pca {
        let neighbors = KNN_NEIGHBORS.min(train.n());
        let test_rows = survey_rows(&test);
        let projected_test = model.project_rows(&test_rows)?;
        let predictions: Vec<usize> = (0..test.n())
            .map(|i| knn_classify(projected_train, &train.labels, projected_test.row(i), neighbors))
            .collect::<Result<_>>()?;
        results.push(MethodResult {
            method: "pca_knn".into(),
            variant: None,
            rule: None,
            metrics: compute_metrics(&predictions, &test.labels, test.k)?,
        });
    }
    let stability = if options.stability {
        Some(stability_report(&profiles, &train)?)
    } else {
        None
    };
    let evaluate_seconds = t2.elapsed().as_secs_f64();

    Ok((
        CellReport {
            label: cell.label.clone(),
            spec: spec.clone(),
            results,
            stability,
        },
        CellTiming {
            label: cell.label.clone(),
            generate_seconds,
            fit_seconds,
            evaluate_seconds,
        },
    ))
}

/// Compares the population amplitude factor against the training tally
/// under the class-normalized variant at the truth's numerical rank.
fn stability_report(
    profiles: &crate::synth::ClassProfiles,
    train: &LabeledDataset,
) -> Result<crate::stability::PerturbationReport> {
    use crate::operator::{default_rank_tol, spectral_decompose};
    let truth = truth_amplitudes(profiles);
    let f = class_frequency_matrix(train)?;
    let empirical = class_normalized_amplitudes(&f, 0.0)?;
    let spectrum = spectral_decompose(&truth, default_rank_tol(train.k))?;
    let r = spectrum.numerical_rank();
    let n_min = train.class_counts().into_iter().min().unwrap_or(0) as u64;
    let params = StabilityParams { n_min: Some(n_min), delta: 0.05 };
    embedding_stability_report(&truth, &empirical, r, &params)
}
