#ifndef HORNSHACL_H
#define HORNSHACL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. The first six values match the exit codes of the
 * command-line tool.
 */
typedef enum HsStatus {
  /**
   * Every target holds.
   */
  HS_STATUS_VALID = 0,
  /**
   * Some target is violated.
   */
  HS_STATUS_VIOLATION = 1,
  /**
   * The knowledge base has no model.
   */
  HS_STATUS_INCONSISTENT = 2,
  /**
   * Unparsable input, or a mode that does not apply to it.
   */
  HS_STATUS_INPUT_ERROR = 3,
  /**
   * The shapes are not stratified.
   */
  HS_STATUS_NOT_STRATIFIED = 4,
  /**
   * The model could not be built within the depth or node limit.
   */
  HS_STATUS_DEPTH_LIMIT = 5,
  /**
   * A required pointer argument was null.
   */
  HS_STATUS_NULL_POINTER = 6,
  /**
   * A string was not UTF-8, or an index was out of range.
   */
  HS_STATUS_INVALID_ARGUMENT = 7,
  /**
   * The library panicked; the handle arguments are left untouched.
   */
  HS_STATUS_INTERNAL = 8,
} HsStatus;

/**
 * Validation route.
 */
typedef enum HsMode {
  HS_MODE_DIRECT = 0,
  HS_MODE_REWRITE = 1,
  HS_MODE_PURE_ALCHI = 2,
  HS_MODE_PURE_SHACLB = 3,
  HS_MODE_CHASE = 4,
} HsMode;

/**
 * A parsed TBox and ABox.
 */
typedef struct HsKnowledgeBase HsKnowledgeBase;

/**
 * The verdicts of one validation run.
 */
typedef struct HsReport HsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed.
 * The string stays valid until the next failing call on this thread.
 */
const char *hs_last_error(void);

/**
 * Parses a knowledge base. Either text may be null for an empty one. On
 * success `*out` receives a handle to release with `hs_kb_free`.
 *
 * # Safety
 * `tbox` and `abox` must each be null or a NUL-terminated string. `out`
 * must be a valid pointer to writable storage for one handle.
 */
enum HsStatus hs_kb_new(const char *tbox, const char *abox, struct HsKnowledgeBase **out);

/**
 * Releases a knowledge base. Null is ignored.
 *
 * # Safety
 * `kb` must be null or a handle from `hs_kb_new` not yet freed.
 */
void hs_kb_free(struct HsKnowledgeBase *kb);

/**
 * Validates `targets` against `shapes` over `kb` along `mode`. A `depth`
 * of zero selects the default. On `Valid`, `Violation` and `Inconsistent`
 * `*out` receives a report to release with `hs_report_free`; otherwise
 * `*out` is left untouched.
 *
 * # Safety
 * `kb` must be a live handle from `hs_kb_new`. `shapes` and `targets` must
 * be NUL-terminated strings. `mode` must be one of the `HsMode` values.
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HsStatus hs_validate(const struct HsKnowledgeBase *kb,
                          const char *shapes,
                          const char *targets,
                          enum HsMode mode,
                          size_t depth,
                          struct HsReport **out);

/**
 * The report as JSON. The string is owned by the report.
 *
 * # Safety
 * `report` must be a live handle from `hs_validate`.
 */
const char *hs_report_json(const struct HsReport *report);

/**
 * Number of targets in the report; zero for a null report.
 *
 * # Safety
 * `report` must be null or a live handle from `hs_validate`.
 */
size_t hs_report_target_count(const struct HsReport *report);

/**
 * Stores whether target `index`, in the order of the JSON report, holds.
 *
 * # Safety
 * `report` must be a live handle from `hs_validate`. `valid` must be a
 * valid pointer to writable storage for one `bool`.
 */
enum HsStatus hs_report_target_valid(const struct HsReport *report, size_t index, bool *valid);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must be null or a handle from `hs_validate` not yet freed.
 */
void hs_report_free(struct HsReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HORNSHACL_H */
