//! C ABI for the density-matrix embedding and classification library.
//!
//! The surface mirrors the two CLI workflows: fit a model from a labeled
//! CSV (`dmm_dataset_load_csv` + `dmm_model_fit`), persist it
//! (`dmm_model_save` / `dmm_model_load`), and apply it to single rows of
//! category strings (`dmm_model_embed_row` / `dmm_model_classify_row`).
//!
//! Conventions:
//! * Every fallible call returns a [`DmmStatus`]; `DMM_STATUS_OK` is zero.
//! * Failures leave a human-readable message in a thread-local slot read
//!   by [`dmm_last_error`]; the pointer stays valid until the next failing
//!   call on the same thread.
//! * Handles (`DmmDataset`, `DmmModel`) are opaque; release them with the
//!   matching `_free` function exactly once. `_free` accepts null.
//! * Strings are NUL-terminated UTF-8. Strings returned by the library
//!   are owned by the handle (or static) and must not be freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dmm::embedding::RankSelection;
use dmm::error::Error;
use dmm::kde::{classify, fit_pipeline, BandwidthRule, Kernel, PipelineOptions, PriorMode, Rule};
use dmm::model::ModelFile;
use dmm::operator::Variant;
use dmm::survey::{load_dataset, CategoricalSchema, LabeledDataset, LoadOptions, SurveySchema};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmmStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Invalid configuration (bad options, malformed model file).
    Config = 3,
    /// Invalid data content (malformed CSV, unknown category or label).
    Data = 4,
    /// A row did not fit the schema.
    Encoding = 5,
    /// Numeric degeneracy (rank-zero operator, invalid bandwidth).
    Numeric = 6,
    /// Buffer or argument shape mismatch.
    Dimension = 7,
    /// Underlying file I/O failure.
    Io = 8,
    /// An internal invariant failed; the handle is still safe to free.
    Panic = 9,
}

/// Operator variant used for the fit.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmmVariant {
    /// Amplitudes are square roots of raw class counts.
    CountBased = 0,
    /// Amplitudes are square roots of smoothed per-class profiles.
    ClassNormalized = 1,
}

/// KDE kernel shape.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmmKernel {
    Gaussian = 0,
    Epanechnikov = 1,
}

/// Per-class bandwidth selection rule.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmmBandwidth {
    /// Plug-in rule h = (mean per-dimension std) · n^(−1/(r+4)).
    Scott = 0,
    /// Leave-one-out log-likelihood over a power-of-two grid around Scott.
    CrossValidated = 1,
}

/// Class priors carried by the fitted model.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmmPriorMode {
    /// Equal weight per class; the MAP rule then equals the ML rule.
    Uniform = 0,
    /// Training-set class frequencies.
    Empirical = 1,
}

/// Decision rule applied to per-class log-densities.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmmRule {
    /// argmax of the class log-density.
    MaximumLikelihood = 0,
    /// argmax of log-prior + class log-density.
    MaximumAPosteriori = 1,
}

/// Fit configuration; obtain defaults from [`dmm_fit_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DmmFitOptions {
    pub variant: DmmVariant,
    pub kernel: DmmKernel,
    pub bandwidth: DmmBandwidth,
    pub priors: DmmPriorMode,
    /// Latent dimensions to keep; 0 keeps every retained eigenvalue.
    pub rank: usize,
    /// Additive smoothing for class-normalized profiles (ignored by the
    /// count-based variant). Must be ≥ 0.
    pub smoothing: f64,
}

/// Labeled categorical dataset handle.
pub struct DmmDataset {
    inner: LabeledDataset,
    categorical: CategoricalSchema,
}

/// Fitted model handle: schema, spectral basis, and per-class KDEs.
pub struct DmmModel {
    file: ModelFile,
    survey: SurveySchema,
    labels: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember(status: DmmStatus, message: &str) -> DmmStatus {
    let stored = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = stored);
    status
}

fn remember_error(e: &Error) -> DmmStatus {
    let status = match e {
        Error::Config(_) => DmmStatus::Config,
        Error::Data(_) => DmmStatus::Data,
        Error::Encoding(_) => DmmStatus::Encoding,
        Error::Numeric(_) => DmmStatus::Numeric,
        Error::Dimension { .. } => DmmStatus::Dimension,
        Error::Io(_) => DmmStatus::Io,
    };
    remember(status, &e.to_string())
}

/// Runs a fallible body, converting panics into `DMM_STATUS_PANIC` so
/// unwinding never crosses the C boundary.
fn guarded<F: FnOnce() -> DmmStatus>(body: F) -> DmmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => remember(DmmStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, DmmStatus> {
    if p.is_null() {
        return Err(remember(DmmStatus::NullArgument, &format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| remember(DmmStatus::InvalidUtf8, &format!("{what} is not valid UTF-8")))
}

fn require<'a, T>(p: *const T, what: &str) -> Result<&'a T, DmmStatus> {
    // Safety: the caller promised a live pointer; null is rejected here.
    unsafe { p.as_ref() }
        .ok_or_else(|| remember(DmmStatus::NullArgument, &format!("{what} is null")))
}

/// Library version as a static NUL-terminated string; never null, do not
/// free.
#[no_mangle]
pub extern "C" fn dmm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread (empty
/// string if none). Valid until the next failing call on the thread; do
/// not free.
#[no_mangle]
pub extern "C" fn dmm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Default fit configuration: count-based variant, gaussian kernel,
/// Scott bandwidth, uniform priors, full rank, no smoothing.
#[no_mangle]
pub extern "C" fn dmm_fit_options_default() -> DmmFitOptions {
    DmmFitOptions {
        variant: DmmVariant::CountBased,
        kernel: DmmKernel::Gaussian,
        bandwidth: DmmBandwidth::Scott,
        priors: DmmPriorMode::Uniform,
        rank: 0,
        smoothing: 0.0,
    }
}

/// Loads a labeled categorical CSV (header row; q feature columns plus a
/// label column). `label_column` may be null: a column named "label" is
/// used if present, otherwise the last column. On success writes a new
/// handle to `out`.
///
/// # Safety
/// `path` and (if non-null) `label_column` must be NUL-terminated;
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn dmm_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    out: *mut *mut DmmDataset,
) -> DmmStatus {
    guarded(|| {
        if out.is_null() {
            return remember(DmmStatus::NullArgument, "out is null");
        }
        let path = match utf8(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let label = if label_column.is_null() {
            None
        } else {
            match utf8(label_column, "label_column") {
                Ok(s) => Some(s),
                Err(status) => return status,
            }
        };
        let opts = LoadOptions { label_column: label, ..LoadOptions::default() };
        match load_dataset(Path::new(path), &opts) {
            Ok((inner, categorical)) => {
                *out = Box::into_raw(Box::new(DmmDataset { inner, categorical }));
                DmmStatus::Ok
            }
            Err(e) => remember_error(&e),
        }
    })
}

/// Number of rows; 0 if `ds` is null.
#[no_mangle]
pub extern "C" fn dmm_dataset_rows(ds: *const DmmDataset) -> usize {
    require(ds, "ds").map(|d| d.inner.n()).unwrap_or(0)
}

/// Number of categorical feature columns (blocks); 0 if `ds` is null.
#[no_mangle]
pub extern "C" fn dmm_dataset_blocks(ds: *const DmmDataset) -> usize {
    require(ds, "ds").map(|d| d.inner.schema.q()).unwrap_or(0)
}

/// Total one-hot dimension (sum of block category counts); 0 if `ds` is
/// null.
#[no_mangle]
pub extern "C" fn dmm_dataset_dim(ds: *const DmmDataset) -> usize {
    require(ds, "ds").map(|d| d.inner.schema.d()).unwrap_or(0)
}

/// Number of distinct labels; 0 if `ds` is null.
#[no_mangle]
pub extern "C" fn dmm_dataset_classes(ds: *const DmmDataset) -> usize {
    require(ds, "ds").map(|d| d.inner.k).unwrap_or(0)
}

/// Releases a dataset handle; null is ignored.
///
/// # Safety
/// `ds` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn dmm_dataset_free(ds: *mut DmmDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn build_model(file: ModelFile) -> Result<DmmModel, Error> {
    let survey = file.categorical.survey_schema()?;
    let labels = file
        .categorical
        .labels
        .iter()
        .map(|l| CString::new(l.as_str().replace('\0', " ")))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Error::Data("label contains an interior NUL".into()))?;
    Ok(DmmModel { file, survey, labels })
}

/// Fits the full pipeline (counts → amplitudes → spectrum → embedding →
/// per-class KDEs) on a dataset. `options` may be null for defaults. On
/// success writes a new model handle to `out`.
///
/// # Safety
/// `out` must point to writable storage for one pointer; `ds` and (if
/// non-null) `options` must be live.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_fit(
    ds: *const DmmDataset,
    options: *const DmmFitOptions,
    out: *mut *mut DmmModel,
) -> DmmStatus {
    guarded(|| {
        if out.is_null() {
            return remember(DmmStatus::NullArgument, "out is null");
        }
        let ds = match require(ds, "ds") {
            Ok(d) => d,
            Err(status) => return status,
        };
        let o = if options.is_null() { dmm_fit_options_default() } else { *options };
        let pipeline = PipelineOptions {
            variant: match o.variant {
                DmmVariant::CountBased => Variant::CountBased,
                DmmVariant::ClassNormalized => Variant::ClassNormalized,
            },
            smoothing: o.smoothing,
            rank_tol: None,
            rank: if o.rank == 0 { RankSelection::FullRank } else { RankSelection::Fixed(o.rank) },
            kernel: match o.kernel {
                DmmKernel::Gaussian => Kernel::Gaussian,
                DmmKernel::Epanechnikov => Kernel::Epanechnikov,
            },
            bandwidth: match o.bandwidth {
                DmmBandwidth::Scott => BandwidthRule::Scott,
                DmmBandwidth::CrossValidated => BandwidthRule::CrossValidated,
            },
            priors: match o.priors {
                DmmPriorMode::Uniform => PriorMode::Uniform,
                DmmPriorMode::Empirical => PriorMode::Empirical,
            },
        };
        let fit = fit_pipeline(&ds.inner, &pipeline)
            .and_then(|(embedding, kde)| {
                build_model(ModelFile::new(ds.categorical.clone(), embedding, kde))
            });
        match fit {
            Ok(model) => {
                *out = Box::into_raw(Box::new(model));
                DmmStatus::Ok
            }
            Err(e) => remember_error(&e),
        }
    })
}

/// Loads a model saved by [`dmm_model_save`], validating its internal
/// consistency. On success writes a new handle to `out`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must point to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_load(
    path: *const c_char,
    out: *mut *mut DmmModel,
) -> DmmStatus {
    guarded(|| {
        if out.is_null() {
            return remember(DmmStatus::NullArgument, "out is null");
        }
        let path = match utf8(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match ModelFile::load(Path::new(path)).and_then(|f| build_model(f)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(model));
                DmmStatus::Ok
            }
            Err(e) => remember_error(&e),
        }
    })
}

/// Writes the model as canonical JSON (byte-reproducible across runs).
///
/// # Safety
/// `model` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_save(
    model: *const DmmModel,
    path: *const c_char,
) -> DmmStatus {
    guarded(|| {
        let model = match require(model, "model") {
            Ok(m) => m,
            Err(status) => return status,
        };
        let path = match utf8(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match model.file.save(Path::new(path)) {
            Ok(()) => DmmStatus::Ok,
            Err(e) => remember_error(&e),
        }
    })
}

/// Latent dimension r; 0 if `model` is null.
#[no_mangle]
pub extern "C" fn dmm_model_rank(model: *const DmmModel) -> usize {
    require(model, "model").map(|m| m.file.kde.r).unwrap_or(0)
}

/// Ambient one-hot dimension d; 0 if `model` is null.
#[no_mangle]
pub extern "C" fn dmm_model_dim(model: *const DmmModel) -> usize {
    require(model, "model").map(|m| m.survey.d()).unwrap_or(0)
}

/// Number of categorical feature columns expected per row; 0 if `model`
/// is null.
#[no_mangle]
pub extern "C" fn dmm_model_blocks(model: *const DmmModel) -> usize {
    require(model, "model").map(|m| m.survey.q()).unwrap_or(0)
}

/// Number of classes; 0 if `model` is null.
#[no_mangle]
pub extern "C" fn dmm_model_classes(model: *const DmmModel) -> usize {
    require(model, "model").map(|m| m.labels.len()).unwrap_or(0)
}

/// Label string for a class index, or null if out of range. Owned by the
/// model handle; do not free.
#[no_mangle]
pub extern "C" fn dmm_model_label(model: *const DmmModel, index: usize) -> *const c_char {
    match require(model, "model") {
        Ok(m) => m.labels.get(index).map(|l| l.as_ptr()).unwrap_or(std::ptr::null()),
        Err(_) => std::ptr::null(),
    }
}

/// Copies the model's retained eigenvalues (descending) into `out`.
/// `cap` must be at least the model rank.
///
/// # Safety
/// `out` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_eigenvalues(
    model: *const DmmModel,
    out: *mut f64,
    cap: usize,
) -> DmmStatus {
    guarded(|| {
        let model = match require(model, "model") {
            Ok(m) => m,
            Err(status) => return status,
        };
        if out.is_null() {
            return remember(DmmStatus::NullArgument, "out is null");
        }
        let eigenvalues = &model.file.embedding.eigenvalues;
        if cap < eigenvalues.len() {
            return remember(
                DmmStatus::Dimension,
                &format!("buffer holds {cap} values, need {}", eigenvalues.len()),
            );
        }
        std::ptr::copy_nonoverlapping(eigenvalues.as_ptr(), out, eigenvalues.len());
        DmmStatus::Ok
    })
}

/// # Safety
/// `values` must point to `len` NUL-terminated strings.
unsafe fn collect_row<'a>(
    values: *const *const c_char,
    len: usize,
) -> Result<Vec<&'a str>, DmmStatus> {
    if values.is_null() {
        return Err(remember(DmmStatus::NullArgument, "values is null"));
    }
    let mut row = Vec::with_capacity(len);
    for i in 0..len {
        row.push(utf8(*values.add(i), &format!("values[{i}]"))?);
    }
    Ok(row)
}

/// Embeds one row of category strings (feature columns in schema order)
/// into latent coordinates. `len` must equal the model's block count and
/// `cap` must be at least its rank; writes rank doubles to `out`.
///
/// # Safety
/// `values` must point to `len` NUL-terminated strings; `out` must point
/// to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_embed_row(
    model: *const DmmModel,
    values: *const *const c_char,
    len: usize,
    out: *mut f64,
    cap: usize,
) -> DmmStatus {
    guarded(|| {
        let model = match require(model, "model") {
            Ok(m) => m,
            Err(status) => return status,
        };
        if out.is_null() {
            return remember(DmmStatus::NullArgument, "out is null");
        }
        let r = model.file.kde.r;
        if cap < r {
            return remember(DmmStatus::Dimension, &format!("buffer holds {cap} values, need {r}"));
        }
        let row = match collect_row(values, len) {
            Ok(row) => row,
            Err(status) => return status,
        };
        let coords = model
            .file
            .categorical
            .encode_row(&row)
            .and_then(|x| model.file.embedding.embed(&model.survey, &x));
        match coords {
            Ok(z) => {
                std::ptr::copy_nonoverlapping(z.as_ptr(), out, r);
                DmmStatus::Ok
            }
            Err(e) => remember_error(&e),
        }
    })
}

/// Classifies one row of category strings. Writes the predicted class
/// index to `out_label`; the string form is available via
/// [`dmm_model_label`].
///
/// # Safety
/// `values` must point to `len` NUL-terminated strings; `out_label` must
/// point to writable storage for one `usize`.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_classify_row(
    model: *const DmmModel,
    values: *const *const c_char,
    len: usize,
    rule: DmmRule,
    out_label: *mut usize,
) -> DmmStatus {
    guarded(|| {
        let model = match require(model, "model") {
            Ok(m) => m,
            Err(status) => return status,
        };
        if out_label.is_null() {
            return remember(DmmStatus::NullArgument, "out_label is null");
        }
        let row = match collect_row(values, len) {
            Ok(row) => row,
            Err(status) => return status,
        };
        let rule = match rule {
            DmmRule::MaximumLikelihood => Rule::Ml,
            DmmRule::MaximumAPosteriori => Rule::Map,
        };
        let label = model
            .file
            .categorical
            .encode_row(&row)
            .and_then(|x| model.file.embedding.embed(&model.survey, &x))
            .and_then(|z| classify(&model.file.kde, &z, rule));
        match label {
            Ok(y) => {
                *out_label = y;
                DmmStatus::Ok
            }
            Err(e) => remember_error(&e),
        }
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn dmm_model_free(model: *mut DmmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
