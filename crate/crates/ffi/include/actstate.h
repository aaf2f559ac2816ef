#ifndef ACTSTATE_H
#define ACTSTATE_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ActStatus {
  ACT_STATUS_OK = 0,
  ACT_STATUS_NULL_POINTER = 1,
  ACT_STATUS_INVALID_ARGUMENT = 2,
  ACT_STATUS_CONFIG = 3,
  ACT_STATUS_INFEASIBLE = 4,
  ACT_STATUS_NUMERICAL = 5,
  ACT_STATUS_WRONG_KIND = 6,
  ACT_STATUS_PANIC = 7,
} ActStatus;

typedef enum ActSpecKind {
  ACT_SPEC_KIND_PTP = 0,
  ACT_SPEC_KIND_BC = 1,
  ACT_SPEC_KIND_PROBING = 2,
  ACT_SPEC_KIND_GAUSSIAN = 3,
} ActSpecKind;

typedef enum ActGaussMode {
  ACT_GAUSS_MODE_JOINT = 0,
  ACT_GAUSS_MODE_MESSAGE_ONLY = 1,
  ACT_GAUSS_MODE_ACTION_INDEPENDENT = 2,
} ActGaussMode;

/**
 * Points and upper hull of a rate region.
 */
typedef struct ActRegion ActRegion;

/**
 * A parsed model configuration.
 */
typedef struct ActSpec ActSpec;

typedef struct ActCdcPoint {
  double rate;
  double distortion;
  double cost;
} ActCdcPoint;

typedef struct ActGaussPoint {
  double rate;
  double distortion;
  double alpha;
  double beta;
  double delta;
  double g;
  bool feasible;
} ActGaussPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *act_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *act_version(void);

/**
 * Loads a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `spec_out` a valid pointer.
 */
enum ActStatus act_spec_load(const char *path, struct ActSpec **spec_out);

/**
 * Parses configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `spec_out` a valid pointer.
 */
enum ActStatus act_spec_parse(const char *text, struct ActSpec **spec_out);

/**
 * # Safety
 * `spec` must come from a load/parse call or be NULL. `kind_out` must be valid.
 */
enum ActStatus act_spec_kind(const struct ActSpec *spec, enum ActSpecKind *kind_out);

/**
 * # Safety
 * `spec` must come from a load/parse call or be NULL; it is invalid afterwards.
 */
void act_spec_free(struct ActSpec *spec);

/**
 * Capacity-distortion-cost value of a `ptp` spec. `u_size` 0 picks the
 * default auxiliary size.
 *
 * # Safety
 * `spec` must be a live handle and `point_out` a valid pointer.
 */
enum ActStatus act_cdc_solve(const struct ActSpec *spec,
                             double distortion,
                             double cost,
                             size_t u_size,
                             size_t restarts,
                             uint64_t seed,
                             struct ActCdcPoint *point_out);

/**
 * Rate region of a `bc` or `probing` spec at cost budget `cost`. Sizes of 0
 * pick the defaults.
 *
 * # Safety
 * `spec` must be a live handle and `region_out` a valid pointer.
 */
enum ActStatus act_bc_region(const struct ActSpec *spec,
                             double cost,
                             size_t u1_size,
                             size_t u2_size,
                             size_t mu_grid,
                             uint64_t seed,
                             struct ActRegion **region_out);

/**
 * Closed-form region of the binary example on `n_alpha` equally spaced
 * values of α in [0, 1/2].
 *
 * # Safety
 * `region_out` must be a valid pointer.
 */
enum ActStatus act_binary_example_region(double n1,
                                         double n2_tilde,
                                         size_t n_alpha,
                                         struct ActRegion **region_out);

/**
 * # Safety
 * `region` must be a live handle and `len_out` a valid pointer.
 */
enum ActStatus act_region_hull_len(const struct ActRegion *region, size_t *len_out);

/**
 * Hull vertex `index`, ordered by increasing `R1`.
 *
 * # Safety
 * `region` must be a live handle; `r1_out` and `r2_out` valid pointers.
 */
enum ActStatus act_region_hull_point(const struct ActRegion *region,
                                     size_t index,
                                     double *r1_out,
                                     double *r2_out);

/**
 * Largest `μ R1 + (1 − μ) R2` over the region.
 *
 * # Safety
 * `region` must be a live handle and `value_out` a valid pointer.
 */
enum ActStatus act_region_support(const struct ActRegion *region, double mu, double *value_out);

/**
 * # Safety
 * `region` must come from a region call or be NULL; it is invalid afterwards.
 */
void act_region_free(struct ActRegion *region);

/**
 * Best rate of the scalar Gaussian example at distortion budget `d`.
 *
 * # Safety
 * `point_out` must be a valid pointer.
 */
enum ActStatus act_gauss_optimize(double p_a,
                                  double p_x,
                                  double var_w,
                                  double var_z,
                                  double d,
                                  enum ActGaussMode mode,
                                  size_t starts,
                                  uint64_t seed,
                                  struct ActGaussPoint *point_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACTSTATE_H */
