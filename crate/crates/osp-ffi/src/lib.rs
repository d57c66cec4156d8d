//! C ABI for the runtime: run or check a program source text, then inspect
//! the outcome through an opaque result handle.
//!
//! Conventions:
//!
//! * Every entry point is `extern "C"`; failures surface as an
//!   [`OspStatus`] on the returned handle, never as an unwind.
//! * Strings returned by accessors are NUL-terminated UTF-8 owned by the
//!   result handle: they stay valid until [`osp_result_free`] and must not
//!   be freed by the caller.
//! * The result handle is the only allocation the caller manages.
//!
//! The generated header lives at `include/osp.h` (written by the build
//! script via cbindgen).

use osp_core::dsl::{self, RunFailure};
use osp_core::engine::DEFAULT_BUDGET;
use std::ffi::{c_char, CStr, CString};

/// Outcome class of a run or check, matching the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OspStatus {
    /// The program ran (or checked) successfully.
    Ok = 0,
    /// The source failed to parse or check; nothing was executed.
    Diagnostics = 1,
    /// Execution started and a statement failed.
    RuntimeError = 2,
    /// Execution exceeded the step budget.
    BudgetExceeded = 3,
    /// The call itself was malformed (null or non-UTF-8 source).
    InvalidArgument = 4,
}

/// Opaque outcome of [`osp_run_source`] or [`osp_check_source`].
pub struct OspResult {
    status: OspStatus,
    /// Event trace (full verbosity); empty when nothing executed.
    trace: CString,
    /// Report payloads in emission order.
    reports: Vec<CString>,
    /// Final graph snapshot; empty when the run did not complete.
    snapshot: CString,
    /// Diagnostics or the runtime error message; empty on success.
    message: CString,
    /// 1-based source position of the first diagnostic or the failing
    /// statement; 0 when not applicable.
    line: u32,
    col: u32,
}

/// NUL bytes cannot appear in values produced from C-string sources, but
/// the conversion must not be able to fail regardless.
fn c_string(s: &str) -> CString {
    CString::new(s).unwrap_or_else(|_| CString::new(s.replace('\0', "\u{fffd}")).unwrap())
}

fn invalid_argument(message: &str) -> *mut OspResult {
    Box::into_raw(Box::new(OspResult {
        status: OspStatus::InvalidArgument,
        trace: c_string(""),
        reports: Vec::new(),
        snapshot: c_string(""),
        message: c_string(message),
        line: 0,
        col: 0,
    }))
}

/// # Safety
/// `src` must be null or a valid NUL-terminated string.
unsafe fn read_source(src: *const c_char) -> Result<String, *mut OspResult> {
    if src.is_null() {
        return Err(invalid_argument("source pointer is null"));
    }
    match CStr::from_ptr(src).to_str() {
        Ok(s) => Ok(s.to_string()),
        Err(_) => Err(invalid_argument("source is not valid UTF-8")),
    }
}

fn failure_result(failure: RunFailure) -> OspResult {
    match failure {
        RunFailure::Diagnostics(diags) => {
            let message = diags
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("\n");
            let first = diags.first().expect("diagnostics are never empty");
            OspResult {
                status: OspStatus::Diagnostics,
                trace: c_string(""),
                reports: Vec::new(),
                snapshot: c_string(""),
                message: c_string(&message),
                line: first.pos.line,
                col: first.pos.col,
            }
        }
        RunFailure::Runtime {
            pos,
            error,
            trace,
            reports,
        } => OspResult {
            status: if error.is_budget() {
                OspStatus::BudgetExceeded
            } else {
                OspStatus::RuntimeError
            },
            trace: c_string(&trace),
            reports: reports.iter().map(|r| c_string(r)).collect(),
            snapshot: c_string(""),
            message: c_string(&error.to_string()),
            line: pos.line,
            col: pos.col,
        },
    }
}

/// Parse, check, and execute a program.
///
/// `budget` bounds the number of walker arrivals; pass 0 for the default.
/// Always returns a fresh handle; inspect it with the `osp_result_*`
/// accessors and release it with [`osp_result_free`].
///
/// # Safety
/// `src` must be null or a valid NUL-terminated string that outlives the
/// call.
#[no_mangle]
pub unsafe extern "C" fn osp_run_source(src: *const c_char, budget: u64) -> *mut OspResult {
    let source = match read_source(src) {
        Ok(s) => s,
        Err(handle) => return handle,
    };
    let budget = if budget == 0 { DEFAULT_BUDGET } else { budget };
    let result = match dsl::run_source(&source, budget) {
        Ok(out) => OspResult {
            status: OspStatus::Ok,
            trace: c_string(&out.trace),
            reports: out.reports.iter().map(|r| c_string(r)).collect(),
            snapshot: c_string(&out.snapshot),
            message: c_string(""),
            line: 0,
            col: 0,
        },
        Err(failure) => failure_result(failure),
    };
    Box::into_raw(Box::new(result))
}

/// Parse and statically check a program without executing it.
///
/// The handle's status is `Ok` or `Diagnostics`; trace, reports, and
/// snapshot stay empty.
///
/// # Safety
/// `src` must be null or a valid NUL-terminated string that outlives the
/// call.
#[no_mangle]
pub unsafe extern "C" fn osp_check_source(src: *const c_char) -> *mut OspResult {
    let source = match read_source(src) {
        Ok(s) => s,
        Err(handle) => return handle,
    };
    let result = match dsl::parse(&source) {
        Err(diag) => failure_result(RunFailure::Diagnostics(vec![diag])),
        Ok(program) => {
            let diags = dsl::check(&program);
            if diags.is_empty() {
                OspResult {
                    status: OspStatus::Ok,
                    trace: c_string(""),
                    reports: Vec::new(),
                    snapshot: c_string(""),
                    message: c_string(""),
                    line: 0,
                    col: 0,
                }
            } else {
                failure_result(RunFailure::Diagnostics(diags))
            }
        }
    };
    Box::into_raw(Box::new(result))
}

/// Status of a result; `InvalidArgument` when `result` is null.
///
/// # Safety
/// `result` must be null or a pointer returned by `osp_run_source` /
/// `osp_check_source` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn osp_result_status(result: *const OspResult) -> OspStatus {
    match result.as_ref() {
        Some(r) => r.status,
        None => OspStatus::InvalidArgument,
    }
}

/// Full event trace; empty string when nothing executed, null when
/// `result` is null. Owned by the handle.
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_trace(result: *const OspResult) -> *const c_char {
    match result.as_ref() {
        Some(r) => r.trace.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Final graph snapshot; empty string when the run did not complete, null
/// when `result` is null. Owned by the handle.
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_snapshot(result: *const OspResult) -> *const c_char {
    match result.as_ref() {
        Some(r) => r.snapshot.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Number of report payloads.
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_report_count(result: *const OspResult) -> usize {
    match result.as_ref() {
        Some(r) => r.reports.len(),
        None => 0,
    }
}

/// Report payload `index` (0-based); null when out of range or `result`
/// is null. Owned by the handle.
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_report(
    result: *const OspResult,
    index: usize,
) -> *const c_char {
    match result.as_ref().and_then(|r| r.reports.get(index)) {
        Some(report) => report.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Diagnostics (one per line) or the runtime error message; empty string
/// on success, null when `result` is null. Owned by the handle.
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_message(result: *const OspResult) -> *const c_char {
    match result.as_ref() {
        Some(r) => r.message.as_ptr(),
        None => std::ptr::null(),
    }
}

/// 1-based line of the first diagnostic or failing statement; 0 when not
/// applicable.
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_line(result: *const OspResult) -> u32 {
    result.as_ref().map_or(0, |r| r.line)
}

/// 1-based column companion to [`osp_result_line`].
///
/// # Safety
/// As for [`osp_result_status`].
#[no_mangle]
pub unsafe extern "C" fn osp_result_col(result: *const OspResult) -> u32 {
    result.as_ref().map_or(0, |r| r.col)
}

/// Release a result handle. Null is ignored; freeing twice is undefined.
///
/// # Safety
/// `result` must be null or a pointer returned by `osp_run_source` /
/// `osp_check_source` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn osp_result_free(result: *mut OspResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Crate version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn osp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
