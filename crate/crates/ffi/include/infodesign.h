#ifndef INFODESIGN_H
#define INFODESIGN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum IdStatus {
  ID_STATUS_OK = 0,
  ID_STATUS_NULL_ARGUMENT = 1,
  ID_STATUS_INVALID_UTF8 = 2,
  ID_STATUS_SPEC = 3,
  ID_STATUS_PARSE = 4,
  ID_STATUS_EVAL = 5,
  ID_STATUS_UNSUPPORTED = 6,
  ID_STATUS_GRID_TOO_LARGE = 7,
  ID_STATUS_INFEASIBLE = 8,
  ID_STATUS_UNBOUNDED = 9,
  ID_STATUS_NUMERICAL = 10,
  ID_STATUS_IO = 11,
  ID_STATUS_BUFFER_TOO_SMALL = 12,
  ID_STATUS_PANIC = 13,
} IdStatus;

// A game (opaque).
typedef struct IdGame IdGame;

// A state-conditional distribution over flows (opaque).
typedef struct IdOutcome IdOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static string.
const char *id_version(void);

// Message of the last failed call on this thread (empty after a success).
// Valid until the next call on the same thread.
const char *id_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void id_string_free(char *s);

// Parses a game document.
//
// # Safety
// `src` must be a NUL-terminated string; `out` must be writable.
enum IdStatus id_game_parse(const char *src, struct IdGame **out);

// A bundled game (`elfarol`, `pigou_info`, `pigou_network`, `random:SEED`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum IdStatus id_game_bundled(const char *name, struct IdGame **out);

// # Safety
// `game` must come from this library and not have been freed; null is
// ignored.
void id_game_free(struct IdGame *game);

// # Safety
// Pointers must be valid.
enum IdStatus id_game_num_states(const struct IdGame *game, uintptr_t *out);

// # Safety
// Pointers must be valid.
enum IdStatus id_game_num_populations(const struct IdGame *game, uintptr_t *out);

// # Safety
// Pointers must be valid.
enum IdStatus id_game_num_actions(const struct IdGame *game, uintptr_t pop, uintptr_t *out);

// Parses an outcome document against `game`.
//
// # Safety
// Pointers must be valid; `src` NUL-terminated.
enum IdStatus id_outcome_parse(const struct IdGame *game, const char *src, struct IdOutcome **out);

// A bundled outcome of a bundled game (`paper_cwe` for `elfarol`,
// `paper_bcwe` for `pigou_info`).
//
// # Safety
// Pointers must be valid; `name` NUL-terminated.
enum IdStatus id_outcome_bundled(const struct IdGame *game,
                                 const char *name,
                                 struct IdOutcome **out);

// # Safety
// `outcome` must come from this library and not have been freed; null is
// ignored.
void id_outcome_free(struct IdOutcome *outcome);

// Writes an outcome document; free the result with `id_string_free`.
//
// # Safety
// Pointers must be valid.
enum IdStatus id_outcome_to_toml(const struct IdGame *game,
                                 const struct IdOutcome *outcome,
                                 char **out);

// Expected social cost of an outcome.
//
// # Safety
// Pointers must be valid.
enum IdStatus id_outcome_social_cost(const struct IdGame *game,
                                     const struct IdOutcome *outcome,
                                     double *out);

// Worst violation of `concept` (`cwe`, `ccwe`, `bcwe`, `sbcwe`, `cbcwe`);
// at most zero means the outcome satisfies it.
//
// # Safety
// Pointers must be valid; `concept` NUL-terminated.
enum IdStatus id_check(const struct IdGame *game,
                       const struct IdOutcome *outcome,
                       const char *concept,
                       double *violation);

// Solves the designer's program on the grid of the given resolution.
// `objective` is `social` or an expression; the optimal outcome is
// returned in `out` and its value in `value`.
//
// # Safety
// Pointers must be valid; `objective` NUL-terminated.
enum IdStatus id_design(const struct IdGame *game,
                        const char *objective,
                        uintptr_t resolution,
                        struct IdOutcome **out,
                        double *value);

// Wardrop equilibria of `state` found on the grid. Writes up to
// `capacity` flows, each the concatenation of all populations' flows, into
// `flows`, and their number into `count`. Returns `BufferTooSmall` (with
// `count` set) when they do not fit.
//
// # Safety
// `flows` must hold `capacity` times the total number of actions doubles
// (it may be null when `capacity` is 0).
enum IdStatus id_we_grid(const struct IdGame *game,
                         uintptr_t state,
                         uintptr_t resolution,
                         double tol,
                         double *flows,
                         uintptr_t capacity,
                         uintptr_t *count);

// Obedience violation of the symmetrized direct structure with
// `denominator` populations implementing `outcome`.
//
// # Safety
// Pointers must be valid.
enum IdStatus id_implement_epsilon(const struct IdGame *game,
                                   const struct IdOutcome *outcome,
                                   uintptr_t denominator,
                                   double *epsilon);

// Finite-player approximation table: for each of the `len` player counts
// writes `(delta_n, eps_n, wasserstein)` to `rows[3 i..3 i + 3]`.
//
// # Safety
// `n_list` must hold `len` counts and `rows` `3 len` doubles.
enum IdStatus id_convergence(const struct IdGame *game,
                             const struct IdOutcome *outcome,
                             const uintptr_t *n_list,
                             uintptr_t len,
                             double *rows);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFODESIGN_H */
