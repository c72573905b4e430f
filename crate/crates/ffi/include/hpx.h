#ifndef HPX_H
#define HPX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Allow several actions per step.
#define HPX_FLAG_CONCURRENT 1

// Minimize the total number of occurrences.
#define HPX_FLAG_OPTIMAL 2

// Use static fluents to prune the search and the emitted program.
#define HPX_FLAG_OPTIMIZE 4

typedef enum HpxPlanFormat {
  // Indented if/else tree.
  HPX_PLAN_FORMAT_TREE = 0,
  // One line, `a; [if f then b else c]`.
  HPX_PLAN_FORMAT_COMPACT = 1,
  // occ/sRes/nextBr atoms, one per line.
  HPX_PLAN_FORMAT_ATOMS = 2,
  // One JSON object per occurrence.
  HPX_PLAN_FORMAT_JSON_LINES = 3,
} HpxPlanFormat;

typedef enum HpxStatus {
  HPX_STATUS_OK = 0,
  // The search finished without a plan within the bounds.
  HPX_STATUS_NO_PLAN = 1,
  HPX_STATUS_NULL_ARGUMENT = 2,
  HPX_STATUS_INVALID_UTF8 = 3,
  HPX_STATUS_PARSE_ERROR = 4,
  HPX_STATUS_INVALID_DOMAIN = 5,
  HPX_STATUS_ENGINE_ERROR = 6,
  HPX_STATUS_EMIT_ERROR = 7,
  HPX_STATUS_INVALID_ARGUMENT = 8,
  HPX_STATUS_PANIC = 9,
} HpxStatus;

// A parsed planning domain.
typedef struct HpxDomain HpxDomain;

// A plan found for a domain. Keeps its own copy of the domain.
typedef struct HpxPlan HpxPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call into the library on the same thread.
const char *hpx_last_error_message(void);

// Parses a nul-terminated domain description into `*out`.
//
// # Safety
// `text` must be null or a valid nul-terminated string; `out` must be null
// or writable.
enum HpxStatus hpx_domain_parse(const char *text, struct HpxDomain **out);

// Checks the well-formedness rules. `Ok` or `InvalidDomain` with every
// violation in the error message.
//
// # Safety
// `domain` must be null or a live handle.
enum HpxStatus hpx_domain_validate(const struct HpxDomain *domain);

// Searches for a plan. Writes a handle to `*out` on `Ok`, null otherwise.
// `flags` is a combination of the `HPX_FLAG_*` constants. `jobs` of zero
// means one thread.
//
// # Safety
// `domain` must be null or a live handle; `out` must be null or writable.
enum HpxStatus hpx_find_plan(const struct HpxDomain *domain,
                             size_t max_steps,
                             size_t max_branches,
                             uint32_t flags,
                             size_t jobs,
                             struct HpxPlan **out);

// Renders a plan into a new string written to `*out`.
//
// # Safety
// `plan` must be null or a live handle; `out` must be null or writable.
enum HpxStatus hpx_plan_render(const struct HpxPlan *plan, enum HpxPlanFormat format, char **out);

// Total number of action occurrences over all branches, or 0 for null.
//
// # Safety
// `plan` must be null or a live handle.
size_t hpx_plan_occurrences(const struct HpxPlan *plan);

// Writes the ASP program for the domain and bounds to `*out`.
//
// # Safety
// `domain` must be null or a live handle; `out` must be null or writable.
enum HpxStatus hpx_emit_program(const struct HpxDomain *domain,
                                size_t max_steps,
                                size_t max_branches,
                                uint32_t flags,
                                char **out);

// # Safety
// `domain` must be null or a handle from [`hpx_domain_parse`] not yet freed.
void hpx_domain_free(struct HpxDomain *domain);

// # Safety
// `plan` must be null or a handle from [`hpx_find_plan`] not yet freed.
void hpx_plan_free(struct HpxPlan *plan);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void hpx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HPX_H */
