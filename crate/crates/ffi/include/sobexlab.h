#ifndef SOBEXLAB_H
#define SOBEXLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result of every call.
 */
typedef enum SobexStatus {
  SOBEX_STATUS_OK = 0,
  SOBEX_STATUS_NULL_POINTER = 1,
  SOBEX_STATUS_INVALID_ARGUMENT = 2,
  SOBEX_STATUS_OUTSIDE_DOMAIN = 3,
  SOBEX_STATUS_ON_INTERFACE = 4,
  SOBEX_STATUS_UNSUPPORTED = 5,
  SOBEX_STATUS_NUMERICAL = 6,
  SOBEX_STATUS_DEGENERATE = 7,
  SOBEX_STATUS_CONFIG = 8,
  SOBEX_STATUS_IO = 9,
  SOBEX_STATUS_BUFFER_TOO_SMALL = 10,
  /**
   * A check of the experiment failed; the report is still returned.
   */
  SOBEX_STATUS_CHECKS_FAILED = 11,
  SOBEX_STATUS_PANIC = 12,
} SobexStatus;

/**
 * Opaque domain handle.
 */
typedef struct SobexDomain SobexDomain;

/**
 * Opaque field handle, bound to the domain it was built on.
 */
typedef struct SobexField SobexField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sobex_last_error(void);

void sobex_clear_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sobex_string_free(char *s);

/**
 * Mushroom domain with the diagonal head placement.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SobexStatus sobex_mushroom_new(uintptr_t n,
                                    double p,
                                    double q,
                                    uintptr_t m,
                                    struct SobexDomain **out);

/**
 * Domain from the `domain` block of a JSON configuration.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SobexStatus sobex_domain_from_config(const char *config_json, struct SobexDomain **out);

/**
 * # Safety
 * `d` must come from this library and not have been freed. Null is ignored.
 */
void sobex_domain_free(struct SobexDomain *d);

/**
 * # Safety
 * `d` must be a live handle.
 */
uintptr_t sobex_domain_dim(const struct SobexDomain *d);

/**
 * `log2` of the stem radius `r_k` and head radius of a mushroom domain.
 *
 * # Safety
 * `d` must be a live handle and the outputs valid pointers.
 */
enum SobexStatus sobex_mushroom_log2_radii(const struct SobexDomain *d,
                                           uintptr_t k,
                                           double *log2_stem,
                                           double *log2_head);

/**
 * Writes 1 to `passed` when the head placement is admissible, 0 otherwise.
 *
 * # Safety
 * `d` must be a live handle and `passed` a valid pointer.
 */
enum SobexStatus sobex_mushroom_validate(const struct SobexDomain *d, int32_t *passed);

/**
 * Region tag of a point as a NUL-terminated string in `buf`.
 *
 * # Safety
 * `x` must hold `len` doubles and `buf` `buf_len` bytes.
 */
enum SobexStatus sobex_domain_classify(const struct SobexDomain *d,
                                       const double *x,
                                       uintptr_t len,
                                       char *buf,
                                       uintptr_t buf_len);

/**
 * Builtin field by name (`thm53`, `sec6:k`, `sec7:k`, `poly:d`, `trig:w`, `const:c`).
 *
 * # Safety
 * `d` must be a live handle, `name` NUL-terminated and `out` valid.
 */
enum SobexStatus sobex_field_new(const struct SobexDomain *d,
                                 const char *name,
                                 struct SobexField **out);

/**
 * # Safety
 * `f` must come from this library and not have been freed. Null is ignored.
 */
void sobex_field_free(struct SobexField *f);

/**
 * Value of a field.
 *
 * # Safety
 * `x` must hold `len` doubles and `out` be valid.
 */
enum SobexStatus sobex_field_value(const struct SobexField *f,
                                   const double *x,
                                   uintptr_t len,
                                   double *out);

/**
 * `E(u)(x)` and, when `grad` is not null, `∇E(u)(x)` written to `grad[0..len]`.
 *
 * # Safety
 * `x` must hold `len` doubles, `grad` room for `len` doubles or be null.
 */
enum SobexStatus sobex_extension_eval(const struct SobexDomain *d,
                                      const struct SobexField *f,
                                      const double *x,
                                      uintptr_t len,
                                      double *value,
                                      double *grad);

/**
 * Supremum of the extrapolated jump of `E(u)` across a face such as `head_bottom:1`.
 *
 * # Safety
 * Handles must be live, `face` NUL-terminated and `sup` valid.
 */
enum SobexStatus sobex_trace_jump(const struct SobexDomain *d,
                                  const struct SobexField *f,
                                  const char *face,
                                  double q,
                                  double *sup);

/**
 * Inner and outer cut-off at offset `s - r/2` and axial coordinate `xn` of a
 * collar with outer radius `r`.
 *
 * # Safety
 * `li` and `lo` must be valid pointers.
 */
enum SobexStatus sobex_cutoffs(double offset, double xn, double r, double *li, double *lo);

/**
 * `∫|f|^p` (`integrand` 0) or `∫|∇f|^p` (`integrand` 1) over a region
 * selection, as `log2` of the total with its relative error. With `extend`
 * set the field is replaced by its extension (mushroom only).
 * `quadrature_json` may be null for the default rule.
 *
 * # Safety
 * Handles must be live, strings NUL-terminated or null where allowed,
 * outputs valid.
 */
enum SobexStatus sobex_norm(const struct SobexDomain *d,
                            const struct SobexField *f,
                            int32_t integrand,
                            double p,
                            const char *regions,
                            int32_t extend,
                            const char *quadrature_json,
                            double *log2_total,
                            double *rel_err);

/**
 * Runs experiment `name` (`homog`, `opnorm`, `rate6`, `rate7`) from a JSON
 * configuration and returns the report as JSON in `out_json`, to be released
 * with [`sobex_string_free`]. Returns `ChecksFailed` with the report still set
 * when a check fails.
 *
 * # Safety
 * Strings must be NUL-terminated and `out_json` valid.
 */
enum SobexStatus sobex_experiment_run(const char *config_json, const char *name, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOBEXLAB_H */
