//! C ABI over the randsel library.
//!
//! Objects are opaque handles created by `rs_*` constructors and released
//! with the matching `rs_*_free`. Every fallible call returns an
//! [`RsStatus`]; on failure a description is available from
//! [`rs_last_error`] on the same thread. Strings returned by the library are
//! released with [`rs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use randsel::data::{self, Dataset, Labels, NoiseKind};
use randsel::kernel::{Bandwidth, LabelKernelKind};
use randsel::mkl::{self, MklModel, TrainOptions};
use randsel::report;
use randsel::selector::{self, RandSelConfig, RowMode, SelectionTrace};
use randsel::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    DegenerateData = 6,
    Coverage = 7,
    Numeric = 8,
    Infeasible = 9,
    Solver = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for RsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Input(_) | Error::Parameter(_) => RsStatus::InvalidArgument,
            Error::DegenerateLabels(_) | Error::DegenerateKernel { .. } | Error::ClassCoverage { .. } => {
                RsStatus::DegenerateData
            }
            Error::Coverage { .. } => RsStatus::Coverage,
            Error::Numeric(_) => RsStatus::Numeric,
            Error::Infeasible(_) => RsStatus::Infeasible,
            Error::Solver(_) => RsStatus::Solver,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => RsStatus::Parse,
            Error::Schema(_) => RsStatus::Schema,
            Error::Io { .. } => RsStatus::Io,
        }
    }
}

pub struct RsDataset(Dataset);
pub struct RsTrace(SelectionTrace);
pub struct RsModel(MklModel);

/// Selection parameters; obtain defaults from [`rs_select_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RsSelectConfig {
    pub tasks: usize,
    pub subsample: usize,
    pub cull: f64,
    pub top_fraction: f64,
    pub fix_after: usize,
    pub fixing: bool,
    pub sigma0: f64,
    pub balanced: bool,
    pub seed: u64,
    pub min_coverage: usize,
    /// Force the delta label kernel for binary labels.
    pub delta_label_kernel: bool,
    /// Use every row in every task instead of bootstrap samples.
    pub full_rows: bool,
}

impl From<&RsSelectConfig> for RandSelConfig {
    fn from(c: &RsSelectConfig) -> Self {
        RandSelConfig {
            tasks: c.tasks,
            subsample: c.subsample,
            cull: c.cull,
            top_fraction: c.top_fraction,
            fix_after: c.fix_after,
            fixing: c.fixing,
            sigma0: c.sigma0,
            balanced: c.balanced,
            master_seed: c.seed,
            min_coverage: c.min_coverage,
            label_kernel: if c.delta_label_kernel { LabelKernelKind::Delta } else { LabelKernelKind::Auto },
            row_mode: if c.full_rows { RowMode::Full } else { RowMode::Bootstrap },
        }
    }
}

/// Training parameters; obtain defaults from [`rs_train_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RsTrainConfig {
    /// Size of the default bandwidth grid.
    pub sigma_count: usize,
    /// LPBoost box parameter; values <= 0 tune it on a validation split.
    pub d: f64,
    pub validation_fraction: f64,
    /// Negatives per positive in each learner's rows; <= 0 disables.
    pub negative_ratio: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (RsStatus, String)>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RsStatus::Panic
        }
    }
}

fn lib<T>(r: randsel::Result<T>) -> Result<T, (RsStatus, String)> {
    r.map_err(|e| (RsStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (RsStatus, String) {
    (RsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (RsStatus, String) {
    (RsStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn to_c_string(s: String) -> Result<*mut c_char, (RsStatus, String)> {
    CString::new(s).map(CString::into_raw).map_err(|_| invalid("string contains an interior NUL"))
}

/// Message for the most recent failure on this thread, or null. The caller
/// owns the string and releases it with [`rs_string_free`].
#[no_mangle]
pub extern "C" fn rs_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a CSV dataset. `label_column` is a header name, or a column index
/// when `has_header` is false.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    has_header: bool,
    out: *mut *mut RsDataset,
) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let label = str_arg(label_column, "label_column")?;
        put(out, RsDataset(lib(data::load_csv(path, label, has_header))?));
        Ok(())
    })
}

/// Builds a binary dataset from a row-major `m x n` matrix and labels in
/// {+1, -1}.
///
/// # Safety
/// `x` must hold `m * n` values and `y` must hold `m` values.
#[no_mangle]
pub unsafe extern "C" fn rs_dataset_from_arrays(
    x: *const f64,
    m: usize,
    n: usize,
    y: *const f64,
    out: *mut *mut RsDataset,
) -> RsStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("x, y or out"));
        }
        let len = m.checked_mul(n).ok_or_else(|| invalid("m * n overflows"))?;
        let values = std::slice::from_raw_parts(x, len).to_vec();
        let labels = std::slice::from_raw_parts(y, m).to_vec();
        let x = ndarray::Array2::from_shape_vec((m, n), values).map_err(|e| invalid(e.to_string()))?;
        let data = lib(Labels::binary(labels).and_then(|y| Dataset::new(x, y)))?;
        put(out, RsDataset(data));
        Ok(())
    })
}

/// XOR data: features 0 and 1 are +-1 and the label is their product.
/// `noise` is 0 for uniform and 1 for Gaussian noise features.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_dataset_gen_xor(
    n_features: usize,
    m: usize,
    noise: u32,
    seed: u64,
    out: *mut *mut RsDataset,
) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let noise = match noise {
            0 => NoiseKind::Uniform,
            1 => NoiseKind::Gaussian,
            k => return Err(invalid(format!("unknown noise kind {k}"))),
        };
        put(out, RsDataset(lib(data::gen_xor(n_features, m, noise, seed))?));
        Ok(())
    })
}

/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn rs_dataset_n_samples(data: *const RsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_samples())
}

/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn rs_dataset_n_features(data: *const RsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_features())
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_dataset_free(data: *mut RsDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

#[no_mangle]
pub extern "C" fn rs_select_config_default() -> RsSelectConfig {
    let c = RandSelConfig::default();
    RsSelectConfig {
        tasks: c.tasks,
        subsample: c.subsample,
        cull: c.cull,
        top_fraction: c.top_fraction,
        fix_after: c.fix_after,
        fixing: c.fixing,
        sigma0: c.sigma0,
        balanced: c.balanced,
        seed: c.master_seed,
        min_coverage: c.min_coverage,
        delta_label_kernel: c.label_kernel == LabelKernelKind::Delta,
        full_rows: c.row_mode == RowMode::Full,
    }
}

/// Runs feature selection to completion.
///
/// # Safety
/// `data` and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_select(
    data: *const RsDataset,
    config: *const RsSelectConfig,
    out: *mut *mut RsTrace,
) -> RsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let config = RandSelConfig::from(ref_arg(config, "config")?);
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, RsTrace(lib(selector::run(&data.0, &config))?));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn rs_trace_n_iterations(trace: *const RsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.iterations.len())
}

/// Copies the final active feature indices into `features`. `len` receives
/// the number of features even when the buffer is too small.
///
/// # Safety
/// `features` must hold `capacity` values (or be null with capacity 0);
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_trace_final_features(
    trace: *const RsTrace,
    features: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> RsStatus {
    guard(|| {
        let trace = ref_arg(trace, "trace")?;
        if len.is_null() {
            return Err(null("len"));
        }
        let active = trace.0.final_active.as_slice();
        *len = active.len();
        if capacity < active.len() {
            return Err((RsStatus::BufferTooSmall, format!("need room for {} features, got {capacity}", active.len())));
        }
        if features.is_null() {
            return Err(null("features"));
        }
        ptr::copy_nonoverlapping(active.as_ptr(), features, active.len());
        Ok(())
    })
}

/// Estimated contribution of `feature` at `iteration`. Fails when the
/// feature was not active then or had no estimate.
///
/// # Safety
/// `trace` must be a live trace handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_trace_contribution(
    trace: *const RsTrace,
    iteration: usize,
    feature: usize,
    value: *mut f64,
) -> RsStatus {
    guard(|| {
        let trace = ref_arg(trace, "trace")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let rec =
            trace.0.iterations.get(iteration).ok_or_else(|| invalid(format!("iteration {iteration} out of range")))?;
        *value = rec
            .contributions
            .contribution(feature)
            .ok_or_else(|| invalid(format!("no contribution for feature {feature} at iteration {iteration}")))?;
        Ok(())
    })
}

/// Serialises the trace as JSON into a new string.
///
/// # Safety
/// `trace` must be a live trace handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_trace_to_json(trace: *const RsTrace, out: *mut *mut c_char) -> RsStatus {
    guard(|| {
        let trace = ref_arg(trace, "trace")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_string(lib(report::trace_to_json(&trace.0))?)?;
        Ok(())
    })
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_trace_from_json(json: *const c_char, out: *mut *mut RsTrace) -> RsStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, RsTrace(lib(report::trace_from_json(json))?));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_trace_free(trace: *mut RsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

#[no_mangle]
pub extern "C" fn rs_train_config_default() -> RsTrainConfig {
    let o = TrainOptions::default();
    RsTrainConfig {
        sigma_count: o.sigma_count,
        d: 0.0,
        validation_fraction: o.validation_fraction,
        negative_ratio: 0.0,
        seed: o.seed,
    }
}

/// Fits the multiple-kernel predictor on the trace's feature sets.
///
/// # Safety
/// Handles and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_train(
    data: *const RsDataset,
    trace: *const RsTrace,
    config: *const RsTrainConfig,
    out: *mut *mut RsModel,
) -> RsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let trace = ref_arg(trace, "trace")?;
        let c = ref_arg(config, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let options = TrainOptions {
            sigma_count: c.sigma_count,
            d: (c.d > 0.0).then_some(c.d),
            validation_fraction: c.validation_fraction,
            negative_ratio: (c.negative_ratio > 0.0).then_some(c.negative_ratio),
            seed: c.seed,
            ..TrainOptions::default()
        };
        let trained = lib(mkl::train(&data.0, &trace.0.levels(), &options))?;
        put(out, RsModel(trained.model));
        Ok(())
    })
}

/// Same as [`rs_train`] with explicit bandwidths instead of the default grid.
///
/// # Safety
/// As [`rs_train`]; `sigmas` must hold `n_sigmas` values.
#[no_mangle]
pub unsafe extern "C" fn rs_train_with_sigmas(
    data: *const RsDataset,
    trace: *const RsTrace,
    config: *const RsTrainConfig,
    sigmas: *const f64,
    n_sigmas: usize,
    out: *mut *mut RsModel,
) -> RsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let trace = ref_arg(trace, "trace")?;
        let c = ref_arg(config, "config")?;
        if out.is_null() || sigmas.is_null() {
            return Err(null("out or sigmas"));
        }
        let sigmas = lib(std::slice::from_raw_parts(sigmas, n_sigmas)
            .iter()
            .map(|&s| Bandwidth::new(s))
            .collect::<randsel::Result<Vec<_>>>())?;
        let options = TrainOptions {
            sigmas: Some(sigmas),
            d: (c.d > 0.0).then_some(c.d),
            validation_fraction: c.validation_fraction,
            negative_ratio: (c.negative_ratio > 0.0).then_some(c.negative_ratio),
            seed: c.seed,
            ..TrainOptions::default()
        };
        let trained = lib(mkl::train(&data.0, &trace.0.levels(), &options))?;
        put(out, RsModel(trained.model));
        Ok(())
    })
}

/// Scores `n_rows` row-major points. `scores` receives the ensemble score
/// and `classes` the predicted class id (binary: 0 is +1, 1 is -1).
///
/// # Safety
/// `x` must hold `n_rows * n_features` values; `scores` and `classes` must
/// hold `n_rows` values each.
#[no_mangle]
pub unsafe extern "C" fn rs_model_predict(
    model: *const RsModel,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    scores: *mut f64,
    classes: *mut usize,
) -> RsStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        if x.is_null() || scores.is_null() || classes.is_null() {
            return Err(null("x, scores or classes"));
        }
        if n_features != model.0.n_features {
            return Err(invalid(format!("model expects {} features, got {n_features}", model.0.n_features)));
        }
        let len = n_rows.checked_mul(n_features).ok_or_else(|| invalid("n_rows * n_features overflows"))?;
        let x = std::slice::from_raw_parts(x, len);
        let scores = std::slice::from_raw_parts_mut(scores, n_rows);
        let classes = std::slice::from_raw_parts_mut(classes, n_rows);
        for (i, row) in x.chunks_exact(n_features.max(1)).enumerate().take(n_rows) {
            let p = lib(model.0.predict(row))?;
            scores[i] = p.score;
            classes[i] = p.class;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rs_model_save(model: *const RsModel, path: *const c_char) -> RsStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        lib(report::save_model(&model.0, str_arg(path, "path")?))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_model_load(path: *const c_char, out: *mut *mut RsModel) -> RsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, RsModel(lib(report::load_model(path))?));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_model_free(model: *mut RsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
