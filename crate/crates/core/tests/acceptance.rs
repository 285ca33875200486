//! Acceptance checks for the shipped library and CLI.
//!
//! Each test covers one numbered criterion and prints a single
//! `ACCEPTANCE <nn> <name>: PASS|FAIL — <detail>` line (visible with
//! `cargo test --test acceptance -- --nocapture`, and automatically for
//! failing checks). Tolerances and budgets are pinned as constants next
//! to the check that uses them.

use std::path::PathBuf;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use dmm::embedding::fit_embedding;
use dmm::kde::{
    fit_pipeline, kde_log_density, select_bandwidth, BandwidthRule, KdeClass, KdeModel, Kernel,
    PipelineOptions,
};
use dmm::linalg::{self, Matrix};
use dmm::operator::{
    amplitude_lift, class_frequency_matrix, class_normalized_amplitudes, default_rank_tol,
    spectral_decompose, AmplitudeMatrix, FrequencyMatrix, Variant,
};
use dmm::rng::{derive_seed, Rng};
use dmm::stability::{
    davis_kahan_bound, imbalance_deviation_bound, operator_perturbation_bound,
    perturbation_epsilon, principal_angle_sines, sin_theta_norm,
};
use dmm::survey::{encode, SurveySchema};
use dmm::synth::{make_profiles, sample_dataset, truth_amplitudes, GeneratorSpec};

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

/// Serializes the criteria so wall-clock budgets and timing ratios are
/// measured on an otherwise idle machine rather than under the default
/// parallel test scheduler.
static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(number: u32, name: &str, ok: bool, detail: &str, elapsed: Duration) {
    println!(
        "ACCEPTANCE {number:02} {name}: {} — {detail} (t={:.2}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dmm-acceptance-{}", std::process::id())).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the CLI binary, panicking on a nonzero exit.
fn run_cli(args: &[&str]) -> Duration {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_dmm"))
        .args(args)
        .output()
        .expect("the dmm binary should spawn");
    assert!(
        output.status.success(),
        "dmm {:?} failed: {}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    start.elapsed()
}

fn read_report(dir: &std::path::Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Accuracy-style metric of the first matching result row in a cell.
fn dmm_metric(report: &serde_json::Value, label: &str, rule: &str, metric: &str) -> f64 {
    let cell = report["cells"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["label"] == label)
        .unwrap_or_else(|| panic!("no cell labeled {label}"));
    let result = cell["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["method"] == "dmm" && r["rule"] == rule)
        .unwrap_or_else(|| panic!("no dmm/{rule} row in {label}"));
    result["metrics"][metric].as_f64().unwrap()
}

/// Symmetric matrix with N(0,1)-scale entries.
fn random_symmetric(d: usize, rng: &mut Rng) -> Matrix {
    let raw = Matrix::from_fn(d, d, |_, _| rng.next_normal());
    Matrix::from_fn(d, d, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
}

/// Dense rho = columns·columnsᵀ / normalizer.
fn dense_operator(a: &AmplitudeMatrix) -> Matrix {
    a.columns.matmul(&a.columns.transpose()).scaled(1.0 / a.trace_normalizer())
}

/// Random generator spec with d ≤ `d_cap`, k ≤ 5, for the property sweeps.
fn random_spec(seed: u64, d_cap: usize) -> GeneratorSpec {
    let mut rng = Rng::new(seed);
    let k = 2 + rng.next_below(4) as usize; // 2..=5
    let mut block_sizes = Vec::new();
    let mut d = 0usize;
    let target_q = 2 + rng.next_below(9) as usize; // 2..=10 blocks
    while block_sizes.len() < target_q {
        let m = 2 + rng.next_below(5) as usize; // 2..=6 modalities
        if d + m > d_cap {
            break;
        }
        block_sizes.push(m);
        d += m;
    }
    while block_sizes.len() < 2 {
        block_sizes.push(2);
    }
    let q = block_sizes.len();
    let mut informative: Vec<usize> = (0..q).filter(|_| rng.next_f64() < 0.7).collect();
    if informative.is_empty() {
        informative.push(0);
    }
    let weights: Vec<f64> = (0..k).map(|_| 0.8 + 0.7 * rng.next_f64()).collect();
    let total: f64 = weights.iter().sum();
    let priors: Vec<f64> = weights.iter().map(|w| w / total).collect();
    GeneratorSpec {
        block_sizes,
        k,
        informative,
        separation: rng.next_f64(),
        noise_blocks: Vec::new(),
        priors,
        n_train: 150 + rng.next_below(150) as usize,
        n_test: 10,
        seed: derive_seed(seed, 1),
    }
}

// ---------------------------------------------------------------------
// 1. Operator axioms
// ---------------------------------------------------------------------

#[test]
fn criterion_01_operator_axioms() {
    let _gate = gate();
    const DATASETS: usize = 1000;
    const TRACE_TOL: f64 = 1e-10;
    const PSD_TOL: f64 = -1e-10;
    const BUDGET: Duration = Duration::from_secs(10);

    let start = Instant::now();
    let mut violations = 0usize;
    let mut worst_trace = 0.0f64;
    let mut worst_eig = 0.0f64;
    for i in 0..DATASETS {
        let spec = random_spec(derive_seed(901, i as u64), 60);
        let profiles = make_profiles(&spec).unwrap();
        let ds = sample_dataset(&profiles, &spec.priors, spec.n_train, spec.seed).unwrap();
        let f = class_frequency_matrix(&ds).unwrap();
        let a = if i % 2 == 0 {
            amplitude_lift(&f)
        } else {
            class_normalized_amplitudes(&f, 0.0).unwrap()
        };
        let rho = dense_operator(&a);
        let trace: f64 = (0..rho.rows()).map(|j| rho[(j, j)]).sum();
        let min_eig = *linalg::sym_eig(&rho).values.last().unwrap();
        let rank = spectral_decompose(&a, default_rank_tol(ds.k)).unwrap().numerical_rank();
        worst_trace = worst_trace.max((trace - 1.0).abs());
        worst_eig = worst_eig.min(min_eig);
        if (trace - 1.0).abs() > TRACE_TOL || min_eig < PSD_TOL || rank > ds.k {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = violations == 0 && elapsed < BUDGET;
    let detail = format!(
        "{DATASETS} datasets, {violations} violations, worst |trace-1|={worst_trace:.2e}, \
         worst min-eig={worst_eig:.2e}"
    );
    verdict(1, "operator axioms", ok, &detail, elapsed);
    assert!(ok, "{detail} ({elapsed:.2?})");
}

// ---------------------------------------------------------------------
// 2. Gram-route equivalence
// ---------------------------------------------------------------------

#[test]
fn criterion_02_gram_route_equivalence() {
    let _gate = gate();
    const TRIALS: usize = 200;
    const EIGENVALUE_TOL: f64 = 1e-10;
    const ANGLE_TOL: f64 = 1e-8;

    let start = Instant::now();
    let mut violations = 0usize;
    let mut worst_value = 0.0f64;
    let mut worst_angle = 0.0f64;
    for t in 0..TRIALS {
        let mut rng = Rng::new(derive_seed(902, t as u64));
        let d = 5 + rng.next_below(46) as usize; // 5..=50
        let k = 2 + rng.next_below(4) as usize; // 2..=5
        let x = Matrix::from_fn(d, k, |_, _| 0.05 + rng.next_f64());
        let a = AmplitudeMatrix::from_columns(x, Variant::CountBased, 0.0);
        let spectrum = spectral_decompose(&a, default_rank_tol(k)).unwrap();
        let dense = linalg::sym_eig(&dense_operator(&a));
        let s = spectrum.numerical_rank();
        let value_err = (0..s)
            .map(|i| (spectrum.eigenvalues[i] - dense.values[i]).abs())
            .fold(0.0f64, f64::max);
        let angle =
            principal_angle_sines(&spectrum.eigenvectors, &dense.vectors.leading_columns(s))
                .unwrap()[0];
        worst_value = worst_value.max(value_err);
        worst_angle = worst_angle.max(angle);
        if value_err > EIGENVALUE_TOL || angle > ANGLE_TOL {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = violations == 0;
    let detail = format!(
        "{TRIALS} matrices, {violations} violations, worst eigenvalue gap={worst_value:.2e}, \
         worst principal sine={worst_angle:.2e}"
    );
    verdict(2, "gram-route equivalence", ok, &detail, elapsed);
    assert!(ok, "{detail}");
}

// ---------------------------------------------------------------------
// 3. Support constraint
// ---------------------------------------------------------------------

#[test]
fn criterion_03_embedding_support() {
    let _gate = gate();
    const EMBEDDINGS: usize = 20;
    const QUERIES_PER_EMBEDDING: usize = 5_000;
    const NORM_CAP: f64 = 1.0 + 1e-12;

    let start = Instant::now();
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for e in 0..EMBEDDINGS {
        let spec = random_spec(derive_seed(903, e as u64), 40);
        let profiles = make_profiles(&spec).unwrap();
        let ds = sample_dataset(&profiles, &spec.priors, spec.n_train, spec.seed).unwrap();
        let (embedding, _) = fit_pipeline(&ds, &PipelineOptions::default()).unwrap();
        let mut rng = Rng::new(derive_seed(904, e as u64));
        for _ in 0..QUERIES_PER_EMBEDDING {
            let modalities: Vec<usize> = ds
                .schema
                .block_sizes()
                .iter()
                .map(|&m| rng.next_below(m as u64) as usize)
                .collect();
            let x = encode(&ds.schema, &modalities).unwrap();
            let z = embedding.embed(&ds.schema, &x).unwrap();
            let norm = z.iter().map(|c| c * c).sum::<f64>().sqrt();
            worst = worst.max(norm);
            if norm > NORM_CAP {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = violations == 0;
    let detail = format!(
        "{} queries, {violations} violations, max norm={worst:.15}",
        EMBEDDINGS * QUERIES_PER_EMBEDDING
    );
    verdict(3, "embedding support", ok, &detail, elapsed);
    assert!(ok, "{detail}");
}

// ---------------------------------------------------------------------
// 4. Bound suites
// ---------------------------------------------------------------------

#[test]
fn criterion_04_bound_suites() {
    let _gate = gate();
    const TRIALS: usize = 500;
    const BUDGET: Duration = Duration::from_secs(30);

    let start = Instant::now();

    // Subspace rotation vs perturbation-over-gap, dense oracles.
    let mut dk_violations = 0usize;
    let d = 8usize;
    let mut rng = Rng::new(941);
    for trial in 0..TRIALS {
        let r = 1 + (trial % 3);
        let basis = linalg::sym_eig(&random_symmetric(d, &mut rng)).vectors;
        let mut values = vec![0.0; d];
        for (i, v) in values.iter_mut().enumerate() {
            *v = if i < r { 0.6 + 0.4 * rng.next_f64() } else { 0.4 * rng.next_f64() };
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let mut a = Matrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                for l in 0..d {
                    a[(i, l)] += values[j] * basis[(i, j)] * basis[(l, j)];
                }
            }
        }
        let gap = values[r - 1] - values[r];
        let e_raw = random_symmetric(d, &mut rng);
        let scale = gap / ((2.5 + 5.5 * rng.next_f64()) * linalg::spectral_norm_sym(&e_raw));
        let e = e_raw.scaled(scale);
        let mut perturbed = a.clone();
        for i in 0..d {
            for j in 0..d {
                perturbed[(i, j)] += e[(i, j)];
            }
        }
        let u1 = linalg::sym_eig(&a).vectors.leading_columns(r);
        let u2 = linalg::sym_eig(&perturbed).vectors.leading_columns(r);
        let sin = sin_theta_norm(&u1, &u2).unwrap();
        let bound = davis_kahan_bound(linalg::spectral_norm_sym(&e), gap).unwrap();
        if sin > bound + 1e-12 {
            dk_violations += 1;
        }
    }

    // Factor perturbation to operator perturbation, dense oracles.
    let mut factor_violations = 0usize;
    let (d, k) = (6usize, 2usize);
    let mut rng = Rng::new(942);
    for _ in 0..TRIALS {
        let psi = Matrix::from_fn(d, k, |_, _| rng.next_normal());
        let delta = Matrix::from_fn(d, k, |_, _| 0.3 * rng.next_normal());
        let mut psi_hat = psi.clone();
        for i in 0..d {
            for j in 0..k {
                psi_hat[(i, j)] += delta[(i, j)];
            }
        }
        let rho = psi.matmul(&psi.transpose()).scaled(1.0 / k as f64);
        let rho_hat = psi_hat.matmul(&psi_hat.transpose()).scaled(1.0 / k as f64);
        let dev = linalg::spectral_norm_sym(&rho_hat.sub(&rho));
        let bound = operator_perturbation_bound(
            linalg::spectral_norm(&psi),
            linalg::spectral_norm(&delta),
            k,
        );
        if dev > bound + 1e-10 {
            factor_violations += 1;
        }
    }

    // Count-weighted vs equal-weighted operator deviation.
    let mut imbalance_violations = 0usize;
    let (d, k) = (10usize, 3usize);
    let mut rng = Rng::new(943);
    for _ in 0..TRIALS {
        let counts: Vec<u64> = (0..d * k).map(|_| 1 + rng.next_u64() % 30).collect();
        let f = FrequencyMatrix::from_counts(d, k, counts).unwrap();
        let a = class_normalized_amplitudes(&f, 0.0).unwrap();
        let total = f.total_mass() as f64;
        let weights: Vec<f64> = f.class_masses().iter().map(|&s| s as f64 / total).collect();
        let mut rho_weighted = Matrix::zeros(d, d);
        let mut rho_equal = Matrix::zeros(d, d);
        for y in 0..k {
            let col = a.columns.col(y);
            for i in 0..d {
                for j in 0..d {
                    let outer = col[i] * col[j];
                    rho_weighted[(i, j)] += weights[y] * outer;
                    rho_equal[(i, j)] += outer / k as f64;
                }
            }
        }
        let dev = linalg::spectral_norm_sym(&rho_weighted.sub(&rho_equal));
        let psi_norm = linalg::spectral_norm(&a.columns);
        let bound = imbalance_deviation_bound(psi_norm * psi_norm, &weights).unwrap();
        if dev > bound + 1e-10 {
            imbalance_violations += 1;
        }
    }

    let elapsed = start.elapsed();
    let ok = dk_violations == 0
        && factor_violations == 0
        && imbalance_violations == 0
        && elapsed < BUDGET;
    let detail = format!(
        "{TRIALS} trials/suite: subspace {dk_violations}, factor {factor_violations}, \
         imbalance {imbalance_violations} violations"
    );
    verdict(4, "perturbation bound suites", ok, &detail, elapsed);
    assert!(ok, "{detail} ({elapsed:.2?})");
}

// ---------------------------------------------------------------------
// 5. Multinomial perturbation Monte Carlo
// ---------------------------------------------------------------------

#[test]
fn criterion_05_multinomial_concentration() {
    let _gate = gate();
    const TRIALS: usize = 200;
    const MIN_SUCCESSES: usize = 190; // ≥ 95%
    const N_MIN: usize = 20_000;
    const CONFIDENCE_DELTA: f64 = 0.05;
    const BUDGET: Duration = Duration::from_secs(60);

    let start = Instant::now();
    // Four 5-modality blocks (d = 20), two classes, mixture weight 0.3:
    // every coordinate probability is at least 0.7·(1/5)/4 = 0.035 ≥ 0.02
    // by construction, so the positivity condition has room at n = 2·10⁴.
    let spec = GeneratorSpec {
        block_sizes: vec![5; 4],
        k: 2,
        informative: vec![0, 1, 2, 3],
        separation: 0.3,
        noise_blocks: Vec::new(),
        priors: vec![0.5, 0.5],
        n_train: 2 * N_MIN,
        n_test: 10,
        seed: 905,
    };
    let profiles = make_profiles(&spec).unwrap();
    let truth = truth_amplitudes(&profiles);
    let rho = dense_operator(&truth);
    let d = truth.d();
    let k = truth.k();
    let p_min = (0..k)
        .flat_map(|c| profiles.coordinate_profile(c))
        .fold(f64::INFINITY, f64::min);
    assert!(p_min >= 0.02, "coordinate floor {p_min} escaped the construction");

    let (epsilon, condition_ok) =
        perturbation_epsilon(k, d, p_min, N_MIN as u64, CONFIDENCE_DELTA).unwrap();
    assert!(condition_ok, "positivity transfer condition must hold at these parameters");
    let bound = operator_perturbation_bound(linalg::spectral_norm(&truth.columns), epsilon, k);

    let mut successes = 0usize;
    let mut worst = 0.0f64;
    for t in 0..TRIALS {
        let ds =
            sample_dataset(&profiles, &spec.priors, spec.n_train, derive_seed(906, t as u64))
                .unwrap();
        let f = class_frequency_matrix(&ds).unwrap();
        let a = class_normalized_amplitudes(&f, 0.0).unwrap();
        let dev = linalg::spectral_norm_sym(&dense_operator(&a).sub(&rho));
        worst = worst.max(dev);
        if dev <= bound {
            successes += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = successes >= MIN_SUCCESSES && elapsed < BUDGET;
    let detail = format!(
        "{successes}/{TRIALS} trials inside bound {bound:.4} (worst deviation {worst:.4}, \
         ε={epsilon:.3}, p_min={p_min:.3})"
    );
    verdict(5, "multinomial concentration", ok, &detail, elapsed);
    assert!(ok, "{detail} ({elapsed:.2?})");
}

// ---------------------------------------------------------------------
// 6 & 11. S1 endpoints/trend and byte determinism (shared runs)
// ---------------------------------------------------------------------

struct S1Runs {
    first_dir: PathBuf,
    second_dir: PathBuf,
    first_elapsed: Duration,
}

fn s1_runs() -> &'static S1Runs {
    static RUNS: OnceLock<S1Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let first_dir = scratch_dir("s1-first");
        let second_dir = scratch_dir("s1-second");
        let first_elapsed =
            run_cli(&["run", "S1", "--seed", "7", "--out", first_dir.to_str().unwrap()]);
        run_cli(&["run", "S1", "--seed", "7", "--out", second_dir.to_str().unwrap()]);
        S1Runs { first_dir, second_dir, first_elapsed }
    })
}

#[test]
fn criterion_06_s1_endpoints_and_trend() {
    let _gate = gate();
    const CHANCE_BAND: (f64, f64) = (0.28, 0.40);
    const PERFECT_FLOOR: f64 = 0.999;
    const MONOTONE_SLACK: f64 = 0.02;
    const BUDGET: Duration = Duration::from_secs(60);

    let runs = s1_runs();
    let report = read_report(&runs.first_dir);
    let deltas = ["0.0", "0.2", "0.4", "0.6", "0.8", "1.0"];
    let accuracies: Vec<f64> = deltas
        .iter()
        .map(|d| dmm_metric(&report, &format!("delta={d}"), "ml", "accuracy"))
        .collect();
    let chance_ok = accuracies[0] >= CHANCE_BAND.0 && accuracies[0] <= CHANCE_BAND.1;
    let perfect_ok = accuracies[5] >= PERFECT_FLOOR;
    let monotone_ok =
        accuracies.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK);
    let ok = chance_ok && perfect_ok && monotone_ok && runs.first_elapsed < BUDGET;
    let detail = format!(
        "accuracies {:?} (chance {} perfect {} monotone {})",
        accuracies.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>(),
        chance_ok,
        perfect_ok,
        monotone_ok
    );
    verdict(6, "separation sweep endpoints", ok, &detail, runs.first_elapsed);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_11_report_determinism() {
    let _gate = gate();
    let start = Instant::now();
    let runs = s1_runs();
    let first = std::fs::read(runs.first_dir.join("report.json")).unwrap();
    let second = std::fs::read(runs.second_dir.join("report.json")).unwrap();
    let json_identical = first == second;
    let first_csv = std::fs::read(runs.first_dir.join("summary.csv")).unwrap();
    let second_csv = std::fs::read(runs.second_dir.join("summary.csv")).unwrap();
    let csv_identical = first_csv == second_csv;
    let ok = json_identical && csv_identical;
    let detail = format!(
        "report.json identical: {json_identical} ({} bytes); summary.csv identical: {csv_identical}",
        first.len()
    );
    verdict(11, "byte-identical reruns", ok, &detail, start.elapsed());
    assert!(ok, "{detail}");
}

// ---------------------------------------------------------------------
// 7. S2 flatness
// ---------------------------------------------------------------------

#[test]
fn criterion_07_s2_cardinality_flatness() {
    let _gate = gate();
    const FLATNESS: f64 = 0.03;
    const BUDGET: Duration = Duration::from_secs(90);

    let dir = scratch_dir("s2");
    let elapsed = run_cli(&["run", "S2", "--seed", "7", "--out", dir.to_str().unwrap()]);
    let report = read_report(&dir);
    let accuracies: Vec<f64> = ["1", "2", "4", "8"]
        .iter()
        .map(|s| dmm_metric(&report, &format!("scale={s}"), "ml", "accuracy"))
        .collect();
    let spread = accuracies.iter().fold(f64::MIN, |a, &b| a.max(b))
        - accuracies.iter().fold(f64::MAX, |a, &b| a.min(b));
    let ok = spread < FLATNESS && elapsed < BUDGET;
    let detail = format!(
        "accuracies {:?}, spread {spread:.4}",
        accuracies.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    verdict(7, "cardinality flatness", ok, &detail, elapsed);
    assert!(ok, "{detail} ({elapsed:.2?})");
}

// ---------------------------------------------------------------------
// 8. S3 noise robustness
// ---------------------------------------------------------------------

#[test]
fn criterion_08_s3_noise_robustness() {
    let _gate = gate();
    const DRIFT: f64 = 0.03;
    const BUDGET: Duration = Duration::from_secs(90);

    let dir = scratch_dir("s3");
    let elapsed = run_cli(&["run", "S3", "--seed", "7", "--out", dir.to_str().unwrap()]);
    let report = read_report(&dir);
    let clean = dmm_metric(&report, "alpha=0.0", "ml", "accuracy");
    let noisy = dmm_metric(&report, "alpha=2.0", "ml", "accuracy");
    let ok = (noisy - clean).abs() < DRIFT && elapsed < BUDGET;
    let detail = format!("accuracy {clean:.4} clean vs {noisy:.4} at 2x noise blocks");
    verdict(8, "noise robustness", ok, &detail, elapsed);
    assert!(ok, "{detail} ({elapsed:.2?})");
}

// ---------------------------------------------------------------------
// 9. S4 decision-rule contrast
// ---------------------------------------------------------------------

#[test]
fn criterion_09_s4_rule_contrast() {
    let _gate = gate();
    const ML_FLOOR: f64 = 0.95;
    const MAP_CEILING: f64 = 0.75;
    const BALANCED_AGREEMENT: f64 = 0.01;
    const BUDGET: Duration = Duration::from_secs(60);

    let dir = scratch_dir("s4");
    let elapsed = run_cli(&["run", "S4", "--seed", "7", "--out", dir.to_str().unwrap()]);
    let report = read_report(&dir);
    let skewed_ml = dmm_metric(&report, "priors=0.95:0.05", "ml", "balanced_accuracy");
    let skewed_map = dmm_metric(&report, "priors=0.95:0.05", "map", "balanced_accuracy");
    let even_ml = dmm_metric(&report, "priors=0.50:0.50", "ml", "balanced_accuracy");
    let even_map = dmm_metric(&report, "priors=0.50:0.50", "map", "balanced_accuracy");
    let ml_ok = skewed_ml >= ML_FLOOR;
    let map_ok = skewed_map <= MAP_CEILING;
    let agreement_ok = (even_ml - even_map).abs() <= BALANCED_AGREEMENT;
    let ok = ml_ok && map_ok && agreement_ok && elapsed < BUDGET;
    let detail = format!(
        "skewed priors: ml {skewed_ml:.4} (≥{ML_FLOOR}: {ml_ok}), map {skewed_map:.4} \
         (≤{MAP_CEILING}: {map_ok}); even priors agree within {:.4} ({agreement_ok})",
        (even_ml - even_map).abs()
    );
    verdict(9, "decision-rule contrast", ok, &detail, elapsed);
    assert!(ok, "{detail}");
}

// ---------------------------------------------------------------------
// 10. KDE normalization by quadrature
// ---------------------------------------------------------------------

/// Composite-Simpson weights over `nodes` points (odd count) with step g.
fn simpson_weights(nodes: usize, g: f64) -> Vec<f64> {
    assert!(nodes >= 3 && nodes % 2 == 1);
    (0..nodes)
        .map(|i| {
            let w = if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * g / 3.0
        })
        .collect()
}

#[test]
fn criterion_10_kde_quadrature() {
    let _gate = gate();
    const CLOUDS: usize = 20;
    const MASS_TOL: f64 = 1e-4;

    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for c in 0..CLOUDS {
        let mut rng = Rng::new(derive_seed(910, c as u64));
        // First half: 1-d, alternating kernels (Simpson resolves the
        // compact kernel's derivative kinks at this node count). Second
        // half: 2-d with the smooth kernel, step tied to the bandwidth.
        let r = if c < CLOUDS / 2 { 1 } else { 2 };
        let kernel =
            if r == 1 && c % 2 == 1 { Kernel::Epanechnikov } else { Kernel::Gaussian };
        // Two-lobe cloud with random spread so bandwidths vary.
        let n = 30 + rng.next_below(150) as usize;
        let spread = 0.3 + 1.7 * rng.next_f64();
        let shift = 3.0 * rng.next_f64();
        let cloud: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let center = if i % 2 == 0 { -shift } else { shift };
                (0..r).map(|_| center + spread * rng.next_normal()).collect()
            })
            .collect();
        let (bandwidth, _) = select_bandwidth(&cloud, kernel, BandwidthRule::Scott);
        let model = KdeModel {
            r,
            kernel,
            classes: vec![KdeClass { label: 0, bandwidth, prior: 1.0, cloud: cloud.clone() }],
        };
        model.validate().unwrap();

        let pad = match kernel {
            Kernel::Gaussian => 8.0 * bandwidth,
            Kernel::Epanechnikov => 1.1 * bandwidth,
        };
        let (mut lo, mut hi) = (vec![f64::INFINITY; r], vec![f64::NEG_INFINITY; r]);
        for point in &cloud {
            for j in 0..r {
                lo[j] = lo[j].min(point[j] - pad);
                hi[j] = hi[j].max(point[j] + pad);
            }
        }
        let mass = match r {
            1 => {
                let nodes = 20_001usize;
                let g = (hi[0] - lo[0]) / (nodes - 1) as f64;
                let w = simpson_weights(nodes, g);
                (0..nodes)
                    .map(|i| {
                        let z = [lo[0] + i as f64 * g];
                        w[i] * kde_log_density(&model, &z, 0).unwrap().exp()
                    })
                    .sum::<f64>()
            }
            _ => {
                // Step ≤ h/6 keeps the Simpson error of the smooth kernel
                // well under the mass tolerance; counts stay bounded.
                let nodes_for = |w: f64| -> usize {
                    let n = ((w / (bandwidth / 6.0)).ceil() as usize + 1).clamp(201, 801);
                    if n % 2 == 0 {
                        n + 1
                    } else {
                        n
                    }
                };
                let (nx, ny) = (nodes_for(hi[0] - lo[0]), nodes_for(hi[1] - lo[1]));
                let gx = (hi[0] - lo[0]) / (nx - 1) as f64;
                let gy = (hi[1] - lo[1]) / (ny - 1) as f64;
                let wx = simpson_weights(nx, gx);
                let wy = simpson_weights(ny, gy);
                let mut total = 0.0;
                for i in 0..nx {
                    let x = lo[0] + i as f64 * gx;
                    for j in 0..ny {
                        let z = [x, lo[1] + j as f64 * gy];
                        total += wx[i] * wy[j] * kde_log_density(&model, &z, 0).unwrap().exp();
                    }
                }
                total
            }
        };
        let err = (mass - 1.0).abs();
        worst = worst.max(err);
        if err > MASS_TOL {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = violations == 0;
    let detail = format!("{CLOUDS} clouds, {violations} off-mass, worst |mass−1|={worst:.2e}");
    verdict(10, "kde unit mass", ok, &detail, elapsed);
    assert!(ok, "{detail}");
}

// ---------------------------------------------------------------------
// 12. Complexity smoke test
// ---------------------------------------------------------------------

#[test]
fn criterion_12_complexity_smoke() {
    let _gate = gate();
    const SPECTRAL_RATIO_CAP: f64 = 2.5;
    const EMBED_RATIO_CAP: f64 = 1.5; // noise margin around d-independence
    const Q: usize = 100;
    const K: usize = 5;

    let start = Instant::now();
    let mut rng = Rng::new(912);

    // Two frequency tables with identical (n, k, q) but doubled d.
    let build = |m: usize, rng: &mut Rng| {
        let d = Q * m;
        let counts: Vec<u64> = (0..d * K).map(|_| 1 + rng.next_u64() % 50).collect();
        FrequencyMatrix::from_counts(d, K, counts).unwrap()
    };
    let narrow = build(6, &mut rng);
    let wide = build(12, &mut rng);

    // Median-of-batches wall time for the spectral stage (lift + Gram
    // eigendecomposition + eigenvector recovery).
    let spectral_time = |f: &FrequencyMatrix| {
        let reps = 60;
        let mut batches: Vec<f64> = (0..5)
            .map(|_| {
                let t = Instant::now();
                for _ in 0..reps {
                    let a = amplitude_lift(f);
                    std::hint::black_box(
                        spectral_decompose(&a, default_rank_tol(K)).unwrap().numerical_rank(),
                    );
                }
                t.elapsed().as_secs_f64()
            })
            .collect();
        batches.sort_by(f64::total_cmp);
        batches[2]
    };
    spectral_time(&narrow); // warm-up
    let t_narrow = spectral_time(&narrow);
    let t_wide = spectral_time(&wide);
    let spectral_ratio = t_wide / t_narrow;

    // Per-query embedding cost at fixed (q, r) across the two widths.
    let embed_time = |f: &FrequencyMatrix, seed: u64| {
        let a = amplitude_lift(f);
        let spectrum = spectral_decompose(&a, default_rank_tol(K)).unwrap();
        let r = spectrum.numerical_rank();
        let embedding = fit_embedding(&spectrum, Q, r).unwrap();
        let m = f.d() / Q;
        let schema = SurveySchema::from_block_sizes(vec![m; Q]).unwrap();
        let mut rng = Rng::new(seed);
        let queries: Vec<_> = (0..2_000)
            .map(|_| {
                let modalities: Vec<usize> =
                    (0..Q).map(|_| rng.next_below(m as u64) as usize).collect();
                encode(&schema, &modalities).unwrap()
            })
            .collect();
        let mut batches: Vec<f64> = (0..5)
            .map(|_| {
                let t = Instant::now();
                for x in &queries {
                    std::hint::black_box(embedding.embed(&schema, x).unwrap());
                }
                t.elapsed().as_secs_f64()
            })
            .collect();
        batches.sort_by(f64::total_cmp);
        batches[2]
    };
    embed_time(&narrow, 913); // warm-up
    let e_narrow = embed_time(&narrow, 914);
    let e_wide = embed_time(&wide, 915);
    let embed_ratio = e_wide / e_narrow;

    let elapsed = start.elapsed();
    let ok = spectral_ratio < SPECTRAL_RATIO_CAP && embed_ratio < EMBED_RATIO_CAP;
    let detail = format!(
        "doubling d: spectral x{spectral_ratio:.2} (cap {SPECTRAL_RATIO_CAP}), \
         per-query embed x{embed_ratio:.2} (cap {EMBED_RATIO_CAP})"
    );
    verdict(12, "complexity scaling", ok, &detail, elapsed);
    assert!(ok, "{detail}");
}
