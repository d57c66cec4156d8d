#ifndef OSP_H
#define OSP_H

/* Generated by cbindgen from the osp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome class of a run or check, matching the CLI exit codes.
typedef enum OspStatus {
  // The program ran (or checked) successfully.
  OSP_STATUS_OK = 0,
  // The source failed to parse or check; nothing was executed.
  OSP_STATUS_DIAGNOSTICS = 1,
  // Execution started and a statement failed.
  OSP_STATUS_RUNTIME_ERROR = 2,
  // Execution exceeded the step budget.
  OSP_STATUS_BUDGET_EXCEEDED = 3,
  // The call itself was malformed (null or non-UTF-8 source).
  OSP_STATUS_INVALID_ARGUMENT = 4,
} OspStatus;

// Opaque outcome of [`osp_run_source`] or [`osp_check_source`].
typedef struct OspResult OspResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse, check, and execute a program.
//
// `budget` bounds the number of walker arrivals; pass 0 for the default.
// Always returns a fresh handle; inspect it with the `osp_result_*`
// accessors and release it with [`osp_result_free`].
//
// # Safety
// `src` must be null or a valid NUL-terminated string that outlives the
// call.
struct OspResult *osp_run_source(const char *src, uint64_t budget);

// Parse and statically check a program without executing it.
//
// The handle's status is `Ok` or `Diagnostics`; trace, reports, and
// snapshot stay empty.
//
// # Safety
// `src` must be null or a valid NUL-terminated string that outlives the
// call.
struct OspResult *osp_check_source(const char *src);

// Status of a result; `InvalidArgument` when `result` is null.
//
// # Safety
// `result` must be null or a pointer returned by `osp_run_source` /
// `osp_check_source` that has not been freed.
enum OspStatus osp_result_status(const struct OspResult *result);

// Full event trace; empty string when nothing executed, null when
// `result` is null. Owned by the handle.
//
// # Safety
// As for [`osp_result_status`].
const char *osp_result_trace(const struct OspResult *result);

// Final graph snapshot; empty string when the run did not complete, null
// when `result` is null. Owned by the handle.
//
// # Safety
// As for [`osp_result_status`].
const char *osp_result_snapshot(const struct OspResult *result);

// Number of report payloads.
//
// # Safety
// As for [`osp_result_status`].
uintptr_t osp_result_report_count(const struct OspResult *result);

// Report payload `index` (0-based); null when out of range or `result`
// is null. Owned by the handle.
//
// # Safety
// As for [`osp_result_status`].
const char *osp_result_report(const struct OspResult *result, uintptr_t index);

// Diagnostics (one per line) or the runtime error message; empty string
// on success, null when `result` is null. Owned by the handle.
//
// # Safety
// As for [`osp_result_status`].
const char *osp_result_message(const struct OspResult *result);

// 1-based line of the first diagnostic or failing statement; 0 when not
// applicable.
//
// # Safety
// As for [`osp_result_status`].
uint32_t osp_result_line(const struct OspResult *result);

// 1-based column companion to [`osp_result_line`].
//
// # Safety
// As for [`osp_result_status`].
uint32_t osp_result_col(const struct OspResult *result);

// Release a result handle. Null is ignored; freeing twice is undefined.
//
// # Safety
// `result` must be null or a pointer returned by `osp_run_source` /
// `osp_check_source` that has not been freed.
void osp_result_free(struct OspResult *result);

// Crate version as a static NUL-terminated string; never freed.
const char *osp_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* OSP_H */
