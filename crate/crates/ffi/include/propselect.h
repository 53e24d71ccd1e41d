#ifndef PROPSELECT_H
#define PROPSELECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every call.
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_ARGUMENT = 1,
  PS_STATUS_INVALID_UTF8 = 2,
  PS_STATUS_INPUT = 3,
  PS_STATUS_PARSE = 4,
  PS_STATUS_CONTRACT = 5,
  PS_STATUS_TOO_LARGE = 6,
  PS_STATUS_UNDEFINED_NORMALIZATION = 7,
  PS_STATUS_INTERNAL = 8,
  PS_STATUS_IO = 9,
  PS_STATUS_PANIC = 10,
} PsStatus;

// How approvals in a PabuLib file become utilities.
typedef enum PsUtilityMode {
  PS_UTILITY_MODE_COST_UTILITY = 0,
  PS_UTILITY_MODE_UNIT = 1,
  PS_UTILITY_MODE_POINTS = 2,
} PsUtilityMode;

// An election together with its active constraint.
typedef struct PsElection PsElection;

// A rule's outcome, tied to the election it was computed on.
typedef struct PsOutcome PsOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses PabuLib text. The election starts with the file's budget constraint.
//
// # Safety
// `pb_text` must be a NUL-terminated string and `out` a valid pointer.
enum PsStatus ps_election_from_pabulib(const char *pb_text,
                                       enum PsUtilityMode mode,
                                       struct PsElection **out);

// Reads a JSON election document. The election starts unconstrained.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum PsStatus ps_election_from_json(const char *json, struct PsElection **out);

// Replaces the election's constraint with a JSON constraint document.
//
// # Safety
// `election` must come from this library; `json` must be NUL-terminated.
enum PsStatus ps_election_set_constraint(struct PsElection *election, const char *json);

// Writes the voter and candidate counts.
//
// # Safety
// `election` must come from this library; the out pointers must be valid.
enum PsStatus ps_election_size(const struct PsElection *election,
                               size_t *num_voters,
                               size_t *num_candidates);

// Runs the named rule (`proprank`, `mes`, `bos`, ...) under the election's constraint.
//
// # Safety
// `election` must come from this library; `rule` must be NUL-terminated and `out` valid.
enum PsStatus ps_run(const struct PsElection *election,
                     const char *rule,
                     double kappa,
                     size_t sigma,
                     struct PsOutcome **out);

// Number of selected candidates.
//
// # Safety
// `outcome` must come from this library and `len` must be valid.
enum PsStatus ps_outcome_len(const struct PsOutcome *outcome, size_t *len);

// Total cost of the selected candidates.
//
// # Safety
// `outcome` must come from this library and `cost` must be valid.
enum PsStatus ps_outcome_total_cost(const struct PsOutcome *outcome, uint64_t *cost);

// Serializes the outcome as JSON. Free the string with [`ps_string_free`].
//
// # Safety
// `outcome` must come from this library and `out` must be valid.
enum PsStatus ps_outcome_to_json(const struct PsOutcome *outcome, char **out);

// Counts EJR violations of the outcome under the election's current constraint.
//
// # Safety
// Both handles must come from this library and `violations` must be valid.
enum PsStatus ps_check_ejr(const struct PsElection *election,
                           const struct PsOutcome *outcome,
                           size_t *violations);

// Message of the last failed call on this thread, or null. Valid until the next call.
const char *ps_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library.
void ps_string_free(char *s);

// # Safety
// `election` must be null or a handle returned by this library.
void ps_election_free(struct PsElection *election);

// # Safety
// `outcome` must be null or a handle returned by this library.
void ps_outcome_free(struct PsOutcome *outcome);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROPSELECT_H */
