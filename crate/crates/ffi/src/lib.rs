//! C interface to the `nkdcd` library.
//!
//! Every function returns an [`NkdcdStatus`]; on failure a description is
//! available from [`nkdcd_last_error_message`] on the same thread. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use libc::{c_char, c_double, c_int, size_t};

use nkdcd::datagen::{generate_lorenz96, generate_var, Adjacency, Lorenz96Spec, TimeSeriesData, Var3Spec};
use nkdcd::inference::{auroc, score_gc, GcScores};
use nkdcd::io::{load_dataset, CheckpointFile};
use nkdcd::numgrad::Matrix;
use nkdcd::optim::{train, TrainConfig};
use nkdcd::NkdcdError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkdcdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Dimension = 5,
    Diverged = 6,
    UndefinedMetric = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A time-series panel with optional truth matrix.
pub struct NkdcdDataset {
    inner: TimeSeriesData,
}

/// A trained model together with its training configuration.
pub struct NkdcdModelHandle {
    checkpoint: CheckpointFile,
    scores: GcScores,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &NkdcdError) -> NkdcdStatus {
    match e {
        NkdcdError::Io { .. } => NkdcdStatus::Io,
        NkdcdError::Parse { .. } => NkdcdStatus::Parse,
        NkdcdError::Shape { .. } | NkdcdError::Dimension(_) => NkdcdStatus::Dimension,
        NkdcdError::Diverged { .. } | NkdcdError::NonFiniteGradient(_) | NkdcdError::Integration { .. } => {
            NkdcdStatus::Diverged
        }
        NkdcdError::UndefinedMetric(_) => NkdcdStatus::UndefinedMetric,
        _ => NkdcdStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (NkdcdStatus, String)>) -> NkdcdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NkdcdStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NkdcdStatus::Panic
        }
    }
}

fn lib<T>(r: nkdcd::Result<T>) -> Result<T, (NkdcdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (NkdcdStatus, String) {
    (NkdcdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (NkdcdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NkdcdStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn copy_out(m: &Matrix, out: *mut c_double, len: size_t) -> Result<(), (NkdcdStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < m.len() {
        return Err((
            NkdcdStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", m.len()),
        ));
    }
    ptr::copy_nonoverlapping(m.data().as_ptr(), out, m.len());
    Ok(())
}

fn into_handle<T>(value: T, out: *mut *mut T) -> Result<(), (NkdcdStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn nkdcd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nkdcd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Sparse VAR(3) panel with default coupling and noise.
#[no_mangle]
pub extern "C" fn nkdcd_generate_var3(n: size_t, t: size_t, seed: u64, out: *mut *mut NkdcdDataset) -> NkdcdStatus {
    guard(|| {
        let spec = Var3Spec {
            n,
            len: t,
            seed,
            ..Var3Spec::default()
        };
        into_handle(NkdcdDataset { inner: lib(generate_var(&spec))? }, out)
    })
}

/// Lorenz-96 panel sampled every 0.1 time units.
#[no_mangle]
pub extern "C" fn nkdcd_generate_lorenz96(
    n: size_t,
    forcing: c_double,
    t: size_t,
    seed: u64,
    out: *mut *mut NkdcdDataset,
) -> NkdcdStatus {
    guard(|| {
        let spec = Lorenz96Spec {
            n,
            forcing,
            len: t,
            seed,
            ..Lorenz96Spec::default()
        };
        into_handle(NkdcdDataset { inner: lib(generate_lorenz96(&spec))? }, out)
    })
}

/// Dataset from a row-major `rows x cols` buffer; `truth` (`cols x cols`
/// bytes, nonzero = edge) may be null.
///
/// # Safety
/// `values` must point to `rows * cols` doubles and `truth`, when non-null, to
/// `cols * cols` bytes.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_dataset_from_values(
    values: *const c_double,
    rows: size_t,
    cols: size_t,
    truth: *const u8,
    out: *mut *mut NkdcdDataset,
) -> NkdcdStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let data = std::slice::from_raw_parts(values, rows * cols).to_vec();
        let m = lib(Matrix::new(rows, cols, data))?;
        let truth = (!truth.is_null()).then(|| {
            let t = std::slice::from_raw_parts(truth, cols * cols);
            Adjacency::from_fn(cols, |i, j| t[i * cols + j] != 0)
        });
        into_handle(NkdcdDataset { inner: lib(TimeSeriesData::new(m, truth))? }, out)
    })
}

/// Reads a CSV panel and optional truth CSV (`truth_path` may be null).
///
/// # Safety
/// Paths must be null or NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_dataset_load_csv(
    path: *const c_char,
    truth_path: *const c_char,
    out: *mut *mut NkdcdDataset,
) -> NkdcdStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let t = if truth_path.is_null() {
            None
        } else {
            Some(str_arg(truth_path, "truth_path")?)
        };
        let d = lib(load_dataset(Path::new(p), t.map(Path::new)))?;
        into_handle(NkdcdDataset { inner: d }, out)
    })
}

/// # Safety
/// `ds` must be a live dataset handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_dataset_shape(ds: *const NkdcdDataset, rows: *mut size_t, cols: *mut size_t) -> NkdcdStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if rows.is_null() || cols.is_null() {
            return Err(null("output"));
        }
        *rows = ds.inner.len();
        *cols = ds.inner.n_series();
        Ok(())
    })
}

/// Copies the row-major values into `out` (capacity `len`).
///
/// # Safety
/// `ds` must be a live dataset handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_dataset_values(ds: *const NkdcdDataset, out: *mut c_double, len: size_t) -> NkdcdStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        copy_out(&ds.inner.values, out, len)
    })
}

/// Z-scores every column in place.
///
/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_dataset_standardize(ds: *mut NkdcdDataset) -> NkdcdStatus {
    guard(|| {
        let ds = ds.as_mut().ok_or_else(|| null("dataset"))?;
        ds.inner = ds.inner.standardized();
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_dataset_free(ds: *mut NkdcdDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn wrap_model(checkpoint: CheckpointFile) -> Result<NkdcdModelHandle, (NkdcdStatus, String)> {
    let model = lib(checkpoint.model())?;
    Ok(NkdcdModelHandle {
        scores: score_gc(&model.lags),
        checkpoint,
    })
}

/// Trains a model. `config_json` holds a JSON training config (missing
/// fields take defaults) or is null for the defaults.
///
/// # Safety
/// `ds` must be a live dataset handle; `config_json` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_train(
    ds: *const NkdcdDataset,
    config_json: *const c_char,
    out: *mut *mut NkdcdModelHandle,
) -> NkdcdStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let cfg: TrainConfig = if config_json.is_null() {
            TrainConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?)
                .map_err(|e| (NkdcdStatus::Parse, format!("config: {e}")))?
        };
        let (model, report) = lib(train(&ds.inner, &cfg))?;
        into_handle(wrap_model(CheckpointFile::from_model(&model, &cfg, None, Some(&report)))?, out)
    })
}

/// # Safety
/// `model` must be a live model handle; `n` and `max_lag` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_dims(
    model: *const NkdcdModelHandle,
    n: *mut size_t,
    max_lag: *mut size_t,
) -> NkdcdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if n.is_null() || max_lag.is_null() {
            return Err(null("output"));
        }
        *n = m.scores.n();
        *max_lag = m.scores.per_lag.len();
        Ok(())
    })
}

/// Row-major `n x n` causal scores; entry `(i, j)` scores `j -> i`.
///
/// # Safety
/// `model` must be a live model handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_scores(model: *const NkdcdModelHandle, out: *mut c_double, len: size_t) -> NkdcdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        copy_out(&m.scores.scores, out, len)
    })
}

/// Row-major `n x n` block norms of lag `lag` (1-based).
///
/// # Safety
/// `model` must be a live model handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_lag_norms(
    model: *const NkdcdModelHandle,
    lag: size_t,
    out: *mut c_double,
    len: size_t,
) -> NkdcdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let norms = lag
            .checked_sub(1)
            .and_then(|l| m.scores.per_lag.get(l))
            .ok_or_else(|| (NkdcdStatus::InvalidArgument, format!("lag {lag} out of range")))?;
        copy_out(norms, out, len)
    })
}

/// AUROC of a model's scores against the dataset's truth matrix.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_auroc(
    model: *const NkdcdModelHandle,
    ds: *const NkdcdDataset,
    include_self: c_int,
    out: *mut c_double,
) -> NkdcdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let truth = ds
            .inner
            .truth
            .as_ref()
            .ok_or_else(|| (NkdcdStatus::InvalidArgument, "dataset has no truth matrix".to_string()))?;
        if out.is_null() {
            return Err(null("output"));
        }
        *out = lib(auroc(&m.scores, truth, include_self != 0))?;
        Ok(())
    })
}

/// AUROC of arbitrary row-major `n x n` scores against `n x n` truth bytes.
///
/// # Safety
/// `scores` must hold `n * n` doubles and `truth` `n * n` bytes.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_auroc(
    scores: *const c_double,
    truth: *const u8,
    n: size_t,
    include_self: c_int,
    out: *mut c_double,
) -> NkdcdStatus {
    guard(|| {
        if scores.is_null() || truth.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let s = std::slice::from_raw_parts(scores, n * n).to_vec();
        let t = std::slice::from_raw_parts(truth, n * n);
        let g = lib(GcScores::from_matrix(lib(Matrix::new(n, n, s))?))?;
        let a = Adjacency::from_fn(n, |i, j| t[i * n + j] != 0);
        *out = lib(auroc(&g, &a, include_self != 0))?;
        Ok(())
    })
}

/// Writes the model as a JSON checkpoint.
///
/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_save(model: *const NkdcdModelHandle, path: *const c_char) -> NkdcdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        lib(m.checkpoint.save(Path::new(str_arg(path, "path")?)))
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_load(path: *const c_char, out: *mut *mut NkdcdModelHandle) -> NkdcdStatus {
    guard(|| {
        let ck = lib(CheckpointFile::load(Path::new(str_arg(path, "path")?)))?;
        into_handle(wrap_model(ck)?, out)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nkdcd_model_free(model: *mut NkdcdModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
