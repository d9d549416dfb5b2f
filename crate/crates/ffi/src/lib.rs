//! C ABI for the `mv3mr` library.
//!
//! Datasets, configurations and models are opaque handles created by the
//! `*_load` / `*_new` / `mv3mr_fit*` functions and released with the
//! matching `*_free`. Every fallible call returns an [`Mv3mrStatus`]; on
//! failure [`mv3mr_last_error_message`] describes the error.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mv3mr::io;
use mv3mr::linalg::Matrix;
use mv3mr::metrics;
use mv3mr::{Dataset, Error, ModelState, TrainConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mv3mrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    Io = 4,
    Parse = 5,
    Numerical = 6,
    UndefinedMetric = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Which rows of a dataset to address.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mv3mrSplit {
    Labeled = 0,
    Unlabeled = 1,
    Test = 2,
    /// Labeled followed by unlabeled rows.
    Train = 3,
}

pub struct Mv3mrDataset(Dataset);

pub struct Mv3mrConfig(TrainConfig);

pub struct Mv3mrModel(ModelState);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> Mv3mrStatus {
    match err {
        Error::InvalidParameter { .. } | Error::OffSimplex { .. } => Mv3mrStatus::InvalidArgument,
        Error::DimensionMismatch { .. }
        | Error::NegativeChiSquaredInput { .. }
        | Error::NonPositiveTrace(_)
        | Error::InvalidData(_) => Mv3mrStatus::InvalidData,
        Error::SingularSystem(_) | Error::NonConvergence { .. } => Mv3mrStatus::Numerical,
        Error::UndefinedMetric { .. } => Mv3mrStatus::UndefinedMetric,
        Error::Parse { .. } => Mv3mrStatus::Parse,
        Error::Io { .. } => Mv3mrStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (Mv3mrStatus, String)>) -> Mv3mrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            Mv3mrStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            Mv3mrStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (Mv3mrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (Mv3mrStatus, String) {
    (Mv3mrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, (Mv3mrStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (Mv3mrStatus::InvalidArgument, format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (Mv3mrStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (Mv3mrStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T) {
    if !out.is_null() {
        *out = value;
    }
}

fn rows_of(data: &Dataset, split: u32) -> Result<Vec<usize>, (Mv3mrStatus, String)> {
    match split {
        s if s == Mv3mrSplit::Labeled as u32 => Ok(data.split.labeled.clone()),
        s if s == Mv3mrSplit::Unlabeled as u32 => Ok(data.split.unlabeled.clone()),
        s if s == Mv3mrSplit::Test as u32 => Ok(data.split.test.clone()),
        s if s == Mv3mrSplit::Train as u32 => Ok(data.split.training()),
        other => Err((Mv3mrStatus::InvalidArgument, format!("unknown split {other}"))),
    }
}

/// Message for the most recent failed call on this thread. Valid until the
/// next `mv3mr_*` call on the same thread; never null.
#[no_mangle]
pub extern "C" fn mv3mr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a dataset manifest.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_dataset_load(path: *const c_char, out: *mut *mut Mv3mrDataset) -> Mv3mrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let data = io::load_dataset(&path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Mv3mrDataset(data)));
        Ok(())
    })
}

/// Sample, label and view counts of a dataset.
///
/// # Safety
/// `data` must be a live dataset handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_dataset_shape(
    data: *const Mv3mrDataset,
    samples: *mut usize,
    labels: *mut usize,
    views: *mut usize,
) -> Mv3mrStatus {
    guard(|| {
        let data = &data.as_ref().ok_or_else(|| null("data"))?.0;
        write_out(samples, data.n_samples());
        write_out(labels, data.n_labels());
        write_out(views, data.n_views());
        Ok(())
    })
}

/// Number of rows in a split (one of the `MV3MR_SPLIT_*` values).
///
/// # Safety
/// `data` must be a live dataset handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_dataset_split_len(
    data: *const Mv3mrDataset,
    split: u32,
    len: *mut usize,
) -> Mv3mrStatus {
    guard(|| {
        let data = &data.as_ref().ok_or_else(|| null("data"))?.0;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = rows_of(data, split)?.len();
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle from [`mv3mr_dataset_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_dataset_free(data: *mut Mv3mrDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// A configuration holding the library defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_config_new(out: *mut *mut Mv3mrConfig) -> Mv3mrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(Mv3mrConfig(TrainConfig::default())));
        Ok(())
    })
}

/// Reads a `key = value` configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_config_load(path: *const c_char, out: *mut *mut Mv3mrConfig) -> Mv3mrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let cfg = io::load_config(&path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Mv3mrConfig(cfg)));
        Ok(())
    })
}

/// Sets one configuration field using the config-file syntax, e.g.
/// `key = "gamma_a"`, `value = "0.01"`. The configuration is unchanged on
/// error.
///
/// # Safety
/// `cfg` must be a live configuration handle; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_config_set(
    cfg: *mut Mv3mrConfig,
    key: *const c_char,
    value: *const c_char,
) -> Mv3mrStatus {
    guard(|| {
        let cfg = &mut cfg.as_mut().ok_or_else(|| null("cfg"))?.0;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        if key.contains(['=', '\n']) || value.contains('\n') {
            return Err((Mv3mrStatus::InvalidArgument, "key and value must be single tokens".into()));
        }
        let text = format!("{}{key} = {value}\n", io::format_config(cfg));
        *cfg = io::parse_config(&text, "<mv3mr_config_set>".as_ref()).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a configuration handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_config_free(cfg: *mut Mv3mrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn fit_with(
    data: *const Mv3mrDataset,
    cfg: *const Mv3mrConfig,
    out: *mut *mut Mv3mrModel,
    uniform: bool,
) -> Mv3mrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let data = &data.as_ref().ok_or_else(|| null("data"))?.0;
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        let model = if uniform {
            mv3mr::fit_uniform_baseline(data, cfg)
        } else {
            mv3mr::fit(data, cfg)
        }
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Mv3mrModel(model)));
        Ok(())
    })
}

/// Learns the classifier together with the kernel and graph weights.
///
/// # Safety
/// `data` and `cfg` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_fit(
    data: *const Mv3mrDataset,
    cfg: *const Mv3mrConfig,
    out: *mut *mut Mv3mrModel,
) -> Mv3mrStatus {
    fit_with(data, cfg, out, false)
}

/// Trains with kernel and graph weights frozen at `1/V`.
///
/// # Safety
/// As [`mv3mr_fit`].
#[no_mangle]
pub unsafe extern "C" fn mv3mr_fit_uniform(
    data: *const Mv3mrDataset,
    cfg: *const Mv3mrConfig,
    out: *mut *mut Mv3mrModel,
) -> Mv3mrStatus {
    fit_with(data, cfg, out, true)
}

/// Writes a model file atomically.
///
/// # Safety
/// `model` must be a live model handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_model_save(model: *const Mv3mrModel, path: *const c_char) -> Mv3mrStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let path = path_arg(path, "path")?;
        io::save_model(&path, model).map_err(lib_err)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_model_load(path: *const c_char, out: *mut *mut Mv3mrModel) -> Mv3mrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let model = io::load_model(&path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Mv3mrModel(model)));
        Ok(())
    })
}

/// Label, view and training-sample counts plus the number of objective
/// values recorded.
///
/// # Safety
/// `model` must be a live model handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_model_shape(
    model: *const Mv3mrModel,
    labels: *mut usize,
    views: *mut usize,
    train_samples: *mut usize,
    trace_len: *mut usize,
) -> Mv3mrStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        write_out(labels, model.n_labels);
        write_out(views, model.n_views());
        write_out(train_samples, model.n_train());
        write_out(trace_len, model.objective_trace.len());
        Ok(())
    })
}

unsafe fn copy_into(src: &[f64], dst: *mut f64, capacity: usize) -> Result<(), (Mv3mrStatus, String)> {
    if dst.is_null() {
        return Err(null("buffer"));
    }
    if capacity < src.len() {
        return Err((
            Mv3mrStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Copies the kernel weights `β` and graph weights `θ`; each buffer must
/// hold one value per view.
///
/// # Safety
/// `beta` and `theta` must point to at least `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_model_weights(
    model: *const Mv3mrModel,
    beta: *mut f64,
    theta: *mut f64,
    capacity: usize,
) -> Mv3mrStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        copy_into(&model.beta, beta, capacity)?;
        copy_into(&model.theta, theta, capacity)
    })
}

/// Copies the objective trace `O_0, O_1, …`.
///
/// # Safety
/// `trace` must point to at least `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_model_trace(model: *const Mv3mrModel, trace: *mut f64, capacity: usize) -> Mv3mrStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        copy_into(&model.objective_trace, trace, capacity)
    })
}

/// Scores the rows of `split` (an `MV3MR_SPLIT_*` value) into `scores` (row-major, one row per
/// sample, one column per label). `rows` receives the row count; when the
/// buffer is too small nothing is written and `BUFFER_TOO_SMALL` is
/// returned.
///
/// # Safety
/// `model` and `data` must be live handles; `scores` must point to at least
/// `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_predict(
    model: *const Mv3mrModel,
    data: *const Mv3mrDataset,
    split: u32,
    scores: *mut f64,
    capacity: usize,
    rows: *mut usize,
) -> Mv3mrStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let data = &data.as_ref().ok_or_else(|| null("data"))?.0;
        let indices = rows_of(data, split)?;
        write_out(rows, indices.len());
        let needed = indices.len() * model.n_labels;
        if capacity < needed {
            return Err((
                Mv3mrStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, need {needed}"),
            ));
        }
        let prediction = model.predict_rows(data, &indices).map_err(lib_err)?;
        let flat: Vec<f64> = prediction.scores.transpose().iter().copied().collect();
        copy_into(&flat, scores, capacity)
    })
}

/// # Safety
/// `model` must be null or a model handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_model_free(model: *mut Mv3mrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

type Failure = (Mv3mrStatus, String);

unsafe fn ranked_args<'a>(
    scores: *const f64,
    truth: *const u8,
    len: usize,
) -> Result<(&'a [f64], Vec<bool>), Failure> {
    if scores.is_null() {
        return Err(null("scores"));
    }
    if truth.is_null() {
        return Err(null("truth"));
    }
    let scores = std::slice::from_raw_parts(scores, len);
    let truth = std::slice::from_raw_parts(truth, len).iter().map(|&t| t != 0).collect();
    Ok((scores, truth))
}

/// 11-point interpolated average precision. `truth[i]` is nonzero for
/// positives.
///
/// # Safety
/// `scores` and `truth` must each point to `len` readable elements.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_average_precision(
    scores: *const f64,
    truth: *const u8,
    len: usize,
    out: *mut f64,
) -> Mv3mrStatus {
    guard(|| {
        let (scores, truth) = ranked_args(scores, truth, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::average_precision_11pt(scores, &truth).map_err(lib_err)?;
        Ok(())
    })
}

/// Area under the ROC curve with half credit for ties.
///
/// # Safety
/// As [`mv3mr_average_precision`].
#[no_mangle]
pub unsafe extern "C" fn mv3mr_auc(scores: *const f64, truth: *const u8, len: usize, out: *mut f64) -> Mv3mrStatus {
    guard(|| {
        let (scores, truth) = ranked_args(scores, truth, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::auc(scores, &truth).map_err(lib_err)?;
        Ok(())
    })
}

/// Mean ranking loss of a row-major `rows × cols` score matrix. Rows with
/// an empty or full label set are skipped; `excluded` receives their count.
///
/// # Safety
/// `scores` and `truth` must each point to `rows * cols` readable elements;
/// `excluded` may be null.
#[no_mangle]
pub unsafe extern "C" fn mv3mr_ranking_loss(
    scores: *const f64,
    truth: *const u8,
    rows: usize,
    cols: usize,
    out: *mut f64,
    excluded: *mut usize,
) -> Mv3mrStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| (Mv3mrStatus::InvalidArgument, "rows * cols overflows".to_string()))?;
        let (scores, truth) = ranked_args(scores, truth, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let matrix = Matrix::from_row_slice(rows, cols, scores);
        let truth: Vec<Vec<bool>> = truth.chunks(cols.max(1)).map(<[bool]>::to_vec).collect();
        let rl = metrics::ranking_loss(&matrix, &truth).map_err(lib_err)?;
        *out = rl.value;
        write_out(excluded, rl.excluded);
        Ok(())
    })
}
