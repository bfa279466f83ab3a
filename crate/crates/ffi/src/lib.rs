//! C interface to the mechproof optimizer and deviation checker.
//!
//! Configs and mechanisms cross the boundary as JSON strings in the same
//! format the `mechproof` CLI reads. Solved mechanisms come back as an opaque
//! [`Report`] handle. Every fallible call returns a [`Status`] and, on
//! failure, leaves a message readable through [`mechproof_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mechproof::exact::to_f64;
use mechproof::experiment::{parse_mechanism, solve_config, verify_config, RunConfig, SolveOutput};
use mechproof::optimizer::SolveReport;
use mechproof::Error;

/// Result codes. The first four match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    /// Malformed config or mechanism, or a model value out of range.
    ConfigError = 1,
    /// No allocation in the search box admits valid rewards.
    NoFeasibleMechanism = 2,
    /// The mechanism admits a profitable deviation.
    VerificationFailed = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    /// The caller's output buffer holds fewer elements than the report has cases.
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// A solved mechanism. Free with [`mechproof_report_free`].
pub struct Report {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: Status, msg: impl Into<String>) -> Status {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> Status {
    match err {
        Error::NoFeasibleMechanism { .. } => Status::NoFeasibleMechanism,
        _ => Status::ConfigError,
    }
}

fn guarded(f: impl FnOnce() -> Status) -> Status {
    clear_error();
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(Status::Internal, "internal error"))
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Status> {
    if s.is_null() {
        return Err(fail(Status::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(Status::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Finds the requestor-optimal mechanism for the model point in
/// `config_json` and stores a new handle in `*out`.
///
/// `*out` is set to null unless `MECHPROOF_STATUS_OK` is returned.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn mechproof_solve(config_json: *const c_char, out: *mut *mut Report) -> Status {
    guarded(|| {
        if out.is_null() {
            return fail(Status::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(config_json, "config_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config = match RunConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(Status::ConfigError, e.to_string()),
        };
        match solve_config(&config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(Report { inner }));
                Status::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Releases a handle from [`mechproof_solve`]. Null is ignored.
///
/// # Safety
/// `report` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mechproof_report_free(report: *mut Report) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of cases (`m + 1`), or 0 for a null handle.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mechproof_report_num_cases(report: *const Report) -> usize {
    report.as_ref().map_or(0, |r| r.inner.mechanism.num_cases())
}

/// Requestor's expected utility, or NaN for a null handle.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mechproof_report_utility(report: *const Report) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| to_f64(&r.inner.utility))
}

/// Copies the task counts `n_1..n_{m+1}` into `out`, which holds `len` values.
///
/// # Safety
/// `report` is a live handle; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn mechproof_report_allocation(report: *const Report, out: *mut u64, len: usize) -> Status {
    guarded(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(Status::NullPointer, "report or out is null");
        };
        let n = r.inner.mechanism.n();
        if len < n.len() {
            return fail(Status::BufferTooSmall, format!("need {} slots, got {len}", n.len()));
        }
        ptr::copy_nonoverlapping(n.as_ptr(), out, n.len());
        Status::Ok
    })
}

/// Copies the extra rewards `t_1..t_{m+1}`, rounded to `double`, into `out`.
///
/// # Safety
/// `report` is a live handle; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn mechproof_report_rewards(report: *const Report, out: *mut f64, len: usize) -> Status {
    guarded(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(Status::NullPointer, "report or out is null");
        };
        let t = r.inner.mechanism.t();
        if len < t.len() {
            return fail(Status::BufferTooSmall, format!("need {} slots, got {len}", t.len()));
        }
        for (i, v) in t.iter().enumerate() {
            *out.add(i) = to_f64(v);
        }
        Status::Ok
    })
}

/// The report as `solve` JSON, including exact rewards. Free the result with
/// [`mechproof_string_free`]. Returns null for a null handle.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mechproof_report_to_json(report: *const Report) -> *mut c_char {
    report.as_ref().map_or(ptr::null_mut(), |r| into_c_string(SolveOutput::from_report(&r.inner).to_json()))
}

/// Searches `mechanism_json` for profitable deviations at the model point in
/// `config_json`. Returns `MECHPROOF_STATUS_OK` when none exists and
/// `MECHPROOF_STATUS_VERIFICATION_FAILED` otherwise. When `out_report` is not
/// null it receives the deviation report as JSON (free with
/// [`mechproof_string_free`]), or null on error.
///
/// # Safety
/// Both inputs must be NUL-terminated strings; `out_report` is null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mechproof_verify_json(
    config_json: *const c_char,
    mechanism_json: *const c_char,
    out_report: *mut *mut c_char,
) -> Status {
    guarded(|| {
        if !out_report.is_null() {
            *out_report = ptr::null_mut();
        }
        let (config, mech) = match (read_str(config_json, "config_json"), read_str(mechanism_json, "mechanism_json")) {
            (Ok(c), Ok(m)) => (c, m),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let config = match RunConfig::from_json(config) {
            Ok(c) => c,
            Err(e) => return fail(Status::ConfigError, e.to_string()),
        };
        let mech = match parse_mechanism(mech) {
            Ok(m) => m,
            Err(e) => return fail(Status::ConfigError, e.to_string()),
        };
        let report = match verify_config(&config, &mech) {
            Ok(r) => r,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        if !out_report.is_null() {
            *out_report = into_c_string(serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        if report.passes() {
            Status::Ok
        } else {
            fail(Status::VerificationFailed, format!("profitable deviation, worst gain {}", report.worst_gain))
        }
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mechproof_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, e.g. `"0.1.0"`. Static; do not free.
#[no_mangle]
pub extern "C" fn mechproof_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mechproof_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
