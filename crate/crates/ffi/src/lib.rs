//! C ABI over the `slidingblocks` library.
//!
//! Every function returns an [`SbStatus`]; on failure the message is kept in
//! a thread-local buffer readable through [`sb_last_error`]. Series are
//! opaque handles created by `sb_series_*` / [`sb_simulate`] and released
//! with [`sb_series_free`]. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slidingblocks::functionals::sliding_sum;
use slidingblocks::oracle::{analytic, candidate_extremal_index, limiting_variance, TailProcessModel};
use slidingblocks::series::{order_statistic, WindowLayout};
use slidingblocks::{estimate, generate, validate_scheme, Error, EstimatorMode, Functional, NormKind, ProcessKind, ProcessSpec, Series};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidScheme = 3,
    Degenerate = 4,
    Parse = 5,
    Io = 6,
    Unsupported = 7,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbNorm {
    Euclidean = 0,
    Sup = 1,
    L1 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbMode {
    Disjoint = 0,
    Sliding = 1,
}

/// Result of [`sb_estimate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SbEstimate {
    pub value: f64,
    pub threshold: f64,
    pub exceedances: usize,
    pub requires_ansjb: bool,
}

/// Opaque series handle.
pub struct SbSeries {
    inner: Series,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SbStatus {
    match err {
        Error::InvalidScheme(_) => SbStatus::InvalidScheme,
        Error::DegenerateThreshold(_) | Error::NoAnchors | Error::TooManyDegenerate { .. } => SbStatus::Degenerate,
        Error::Parse(_) => SbStatus::Parse,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Write { .. } => SbStatus::Io,
        Error::Unsupported(_) | Error::Dimension { .. } => SbStatus::Unsupported,
        _ => SbStatus::InvalidArgument,
    }
}

struct Fail(SbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SbStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SbStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SbStatus::Parse, format!("`{what}` is not valid UTF-8")))
}

unsafe fn series_arg<'a>(p: *const SbSeries) -> Result<&'a Series, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("series"))
}

fn norm_kind(n: SbNorm) -> NormKind {
    match n {
        SbNorm::Euclidean => NormKind::Euclidean,
        SbNorm::Sup => NormKind::Sup,
        SbNorm::L1 => NormKind::L1,
    }
}

fn emit_series(series: Series, out: *mut *mut SbSeries) {
    let handle = Box::into_raw(Box::new(SbSeries { inner: series }));
    unsafe { *out = handle };
}

/// Last error message on this thread, or NULL. Valid until the next call
/// into this library on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a series from `n * dim` row-major coordinates.
///
/// # Safety
/// `values` must point to `n * dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_series_new(values: *const f64, n: usize, dim: usize, norm: SbNorm, out: *mut *mut SbSeries) -> SbStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Fail(SbStatus::InvalidArgument, "n * dim overflows".into()))?;
        let data = std::slice::from_raw_parts(values, len).to_vec();
        emit_series(Series::from_flat(dim, data, norm_kind(norm))?, out);
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `series` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sb_series_free(series: *mut SbSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of points, 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_series_len(series: *const SbSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// Dimension of each point, 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_series_dim(series: *const SbSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.dim())
}

/// Copies up to `cap` norms into `out`; writes the full count to `written`.
///
/// # Safety
/// `out` must have room for `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_series_norms(series: *const SbSeries, out: *mut f64, cap: usize, written: *mut usize) -> SbStatus {
    guard(|| {
        let s = series_arg(series)?;
        if out.is_null() && cap > 0 {
            return Err(null("out"));
        }
        if written.is_null() {
            return Err(null("written"));
        }
        let norms = s.norms();
        let count = norms.len().min(cap);
        if count > 0 {
            ptr::copy_nonoverlapping(norms.as_ptr(), out, count);
        }
        *written = norms.len();
        Ok(())
    })
}

/// Simulates a process given in the model grammar, e.g. `ar1:rho=0.5,alpha=1`.
///
/// # Safety
/// `process` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_simulate(process: *const c_char, n: usize, seed: u64, out: *mut *mut SbSeries) -> SbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind: ProcessKind = str_arg(process, "process")?.parse()?;
        emit_series(generate(&ProcessSpec::new(kind, n, seed))?, out);
        Ok(())
    })
}

/// Disjoint or sliding blocks estimate with the `k`-th upper order statistic
/// as threshold.
///
/// # Safety
/// `series` must be a live handle, `functional` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_estimate(
    series: *const SbSeries,
    functional: *const c_char,
    r_n: usize,
    k: usize,
    mode: SbMode,
    out: *mut SbEstimate,
) -> SbStatus {
    guard(|| {
        let s = series_arg(series)?;
        let f: Functional = str_arg(functional, "functional")?.parse()?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (scheme, _) = validate_scheme(s.len(), r_n, k)?;
        let mode = match mode {
            SbMode::Disjoint => EstimatorMode::Disjoint,
            SbMode::Sliding => EstimatorMode::Sliding,
        };
        let r = estimate(s, &f, &scheme, mode)?;
        *out = SbEstimate {
            value: r.value,
            threshold: r.threshold.value,
            exceedances: r.exceedance_count_observed,
            requires_ansjb: r.requires_ansjb,
        };
        Ok(())
    })
}

/// `sum_{i=0}^{q_n-1} H(X_{i+1..i+r_n} / scale)` over all full windows.
///
/// # Safety
/// `series` must be a live handle, `functional` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_sliding_sum(series: *const SbSeries, functional: *const c_char, r_n: usize, scale: f64, out: *mut f64) -> SbStatus {
    guard(|| {
        let s = series_arg(series)?;
        let f: Functional = str_arg(functional, "functional")?.parse()?;
        if out.is_null() {
            return Err(null("out"));
        }
        let layout = WindowLayout::new(s.len(), r_n)?;
        *out = sliding_sum(&f, s, &layout, scale)?;
        Ok(())
    })
}

/// The `(n-k)`-th smallest of `n` values.
///
/// # Safety
/// `values` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_order_statistic(values: *const f64, n: usize, k: usize, out: *mut f64) -> SbStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = std::slice::from_raw_parts(values, n);
        *out = order_statistic(v, k)?.value;
        Ok(())
    })
}

/// Candidate extremal index of a tail-process model: the closed form when
/// known (`stderr = 0`), otherwise a Monte Carlo estimate.
///
/// # Safety
/// `model` must be a NUL-terminated string; `value` and `stderr` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_oracle_theta(model: *const c_char, samples: u64, seed: u64, value: *mut f64, stderr: *mut f64) -> SbStatus {
    guard(|| {
        let kind: ProcessKind = str_arg(model, "model")?.parse()?;
        if value.is_null() || stderr.is_null() {
            return Err(null("value/stderr"));
        }
        let m = TailProcessModel::new(kind)?;
        let (v, se) = match analytic::theta(m.kind()) {
            Some(t) => (t, 0.0),
            None => {
                let e = candidate_extremal_index(&m, samples, seed).mc();
                (e.value, e.stderr)
            }
        };
        *value = v;
        *stderr = se;
        Ok(())
    })
}

/// Limiting variance of `sqrt(k)(nu_hat*(H) - nu*(H))` for an indicator
/// functional (or `exc`); closed form when known, Monte Carlo otherwise.
///
/// # Safety
/// `model` and `functional` must be NUL-terminated strings; `value` and
/// `stderr` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_oracle_limiting_variance(
    model: *const c_char,
    functional: *const c_char,
    samples: u64,
    seed: u64,
    value: *mut f64,
    stderr: *mut f64,
) -> SbStatus {
    guard(|| {
        let kind: ProcessKind = str_arg(model, "model")?.parse()?;
        let f: Functional = str_arg(functional, "functional")?.parse()?;
        if value.is_null() || stderr.is_null() {
            return Err(null("value/stderr"));
        }
        let m = TailProcessModel::new(kind)?;
        let (v, se) = match analytic::limiting_variance(m.kind(), &f) {
            Some(v) => (v, 0.0),
            None => {
                let est = limiting_variance(&m, &f, samples, seed)?;
                (est.value, est.stderr)
            }
        };
        *value = v;
        *stderr = se;
        Ok(())
    })
}
