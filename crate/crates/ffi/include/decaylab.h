#ifndef DECAYLAB_H
#define DECAYLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_NULL_POINTER = 1,
  DL_STATUS_INVALID_UTF8 = 2,
  DL_STATUS_CONFIG = 3,
  DL_STATUS_DOMAIN = 4,
  DL_STATUS_NEWTON = 5,
  DL_STATUS_SOLVER = 6,
  DL_STATUS_ANALYSIS = 7,
  DL_STATUS_IO = 8,
  DL_STATUS_BUFFER_TOO_SMALL = 9,
  DL_STATUS_NOT_FOUND = 10,
  DL_STATUS_PANIC = 99,
} DlStatus;

typedef enum DlVerdict {
  DL_VERDICT_PASS = 0,
  DL_VERDICT_FAIL = 1,
  DL_VERDICT_NOT_APPLICABLE = 2,
  DL_VERDICT_WARN = 3,
} DlVerdict;

/**
 * A damping law from the catalog.
 */
typedef struct DlLaw DlLaw;

/**
 * Outcome of a full verification run.
 */
typedef struct DlReport DlReport;

/**
 * Result of the A2 checker.
 */
typedef struct DlA2Result {
  bool verdict;
  bool limits_ok;
  bool ineq2_ok;
  bool ineq3_ok;
  /**
   * `0` positive, `1` zero, `2` divergent.
   */
  int32_t alpha0_status;
  double alpha0;
} DlA2Result;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dl_last_error(char *buf, size_t len);

/**
 * Builds a catalog law. `law_toml` is the body of a `[law]` table, e.g.
 * `kind = "polynomial"\np = 3.0`.
 *
 * # Safety
 * `law_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum DlStatus dl_law_new(const char *law_toml, struct DlLaw **out);

/**
 * # Safety
 * `law` must be null or a handle from [`dl_law_new`] not yet freed.
 */
void dl_law_free(struct DlLaw *law);

/**
 * Evaluates `g(s)` and `g'(s)`.
 *
 * # Safety
 * `law` must be a live handle; `g` and `g_prime` must be writable.
 */
enum DlStatus dl_law_eval(const struct DlLaw *law, double s, double *g, double *g_prime);

/**
 * `h^{-1}` and its first three derivatives at `y` for damping mass `m_a`.
 *
 * # Safety
 * `law` must be a live handle; `out` must point to 4 writable doubles.
 */
enum DlStatus dl_h_inverse_derivs(const struct DlLaw *law, double m_a, double y, double *out);

/**
 * Solves the decay ODE for `phi` on `n` uniform samples of `[0, t_end]`.
 *
 * # Safety
 * `law` must be a live handle; `out` must point to `n` writable doubles.
 */
enum DlStatus dl_solve_phi(const struct DlLaw *law,
                           double m_a,
                           double eps0,
                           double c1,
                           double beta,
                           double phi0,
                           double r0,
                           double t_end,
                           size_t n,
                           double *out);

/**
 * Runs the A2 checker.
 *
 * # Safety
 * `law` must be a live handle; `out` must be writable.
 */
enum DlStatus dl_check_a2(const struct DlLaw *law,
                          double m_a,
                          double beta,
                          double r0,
                          size_t n_samples,
                          struct DlA2Result *out);

/**
 * Parses a TOML run configuration and runs the full verification.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum DlStatus dl_verify_run(const char *config_toml, struct DlReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`dl_verify_run`] not yet freed.
 */
void dl_report_free(struct DlReport *report);

/**
 * True when no verdict failed. A null handle reads as false.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool dl_report_passed(const struct DlReport *report);

/**
 * Number of energy records.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t dl_report_len(const struct DlReport *report);

/**
 * Copies record times and `E_uv` into `times` and `energy` (`len` each).
 *
 * # Safety
 * `report` must be a live handle; both buffers must hold `len` doubles.
 */
enum DlStatus dl_report_energy(const struct DlReport *report,
                               double *times,
                               double *energy,
                               size_t len);

/**
 * Looks up a named verdict such as `upper_envelope`.
 *
 * # Safety
 * `report` must be a live handle; `name` NUL-terminated; `out` writable.
 */
enum DlStatus dl_report_verdict(const struct DlReport *report,
                                const char *name,
                                enum DlVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECAYLAB_H */
