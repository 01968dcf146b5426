/* SPDX-License-Identifier: Apache-2.0 */

#ifndef GUIDER_H
#define GUIDER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Grid cell codes accepted by [`guider_nav_new`].
 */
#define GUIDER_CELL_FREE 0

#define GUIDER_CELL_UNKNOWN 1

#define GUIDER_CELL_OCCUPIED 2

/**
 * One-sided alternative for [`guider_wilcoxon`], passed as its integer value.
 */
typedef enum GuiderAlternative {
  GUIDER_ALTERNATIVE_GREATER = 0,
  GUIDER_ALTERNATIVE_LESS = 1,
} GuiderAlternative;

/**
 * Layer selector for [`guider_nav_layer`], passed as its integer value.
 */
typedef enum GuiderNavLayer {
  GUIDER_NAV_LAYER_BASE = 0,
  GUIDER_NAV_LAYER_MOTION = 1,
  GUIDER_NAV_LAYER_SYNERGY = 2,
  GUIDER_NAV_LAYER_COMBINED = 3,
} GuiderNavLayer;

typedef enum GuiderStatus {
  GUIDER_STATUS_OK = 0,
  GUIDER_STATUS_NULL_POINTER = 1,
  GUIDER_STATUS_INVALID_ARGUMENT = 2,
  GUIDER_STATUS_CONFIG = 3,
  GUIDER_STATUS_INPUT = 4,
  GUIDER_STATUS_DEGENERATE = 5,
  GUIDER_STATUS_PANIC = 6,
} GuiderStatus;

/**
 * Opaque end-effector tracker handle.
 */
typedef struct GuiderEef GuiderEef;

/**
 * Opaque navigation belief handle.
 */
typedef struct GuiderNav GuiderNav;

typedef struct GuiderPrediction {
  /**
   * Cell column and row of the predicted area.
   */
  size_t x;
  size_t y;
  /**
   * Cell centre in the global frame, metres.
   */
  double wx;
  double wy;
  double value;
} GuiderPrediction;

typedef struct GuiderGraspVerdict {
  bool bbox;
  bool morph;
  bool advanced;
  double bbox_short_side_m;
} GuiderGraspVerdict;

typedef struct GuiderWilcoxon {
  size_t n;
  double w_plus;
  double w_minus;
  double p_two;
  double p_one;
  double r_bs;
} GuiderWilcoxon;

typedef struct GuiderMetrics {
  bool has_rtcp;
  double rtcp;
  double stability;
} GuiderMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t guider_last_error(char *buf, size_t len);

/**
 * Build a navigation belief over a row-major grid of `GUIDER_CELL_*` codes.
 * `config` may be null for the defaults.
 *
 * # Safety
 * `cells` must point to `width * height` bytes, `config` must be null or a
 * NUL-terminated string, and `out` must be writable.
 */
enum GuiderStatus guider_nav_new(size_t width,
                                 size_t height,
                                 double resolution,
                                 double origin_x,
                                 double origin_y,
                                 const uint8_t *cells,
                                 const char *config,
                                 struct GuiderNav **out);

/**
 * Release a navigation handle. Null is ignored.
 *
 * # Safety
 * `nav` must come from [`guider_nav_new`] and not be used afterwards.
 */
void guider_nav_free(struct GuiderNav *nav);

/**
 * Feed one odometry sample; `accepted` reports whether it passed the
 * update-distance gate and changed the layers.
 *
 * # Safety
 * `nav` must be a live handle; `accepted` may be null.
 */
enum GuiderStatus guider_nav_observe(struct GuiderNav *nav,
                                     double t,
                                     double x,
                                     double y,
                                     double vx,
                                     double vy,
                                     bool *accepted);

/**
 * Current predicted area: peak of the combined belief over free cells.
 *
 * # Safety
 * `nav` must be a live handle and `out` writable.
 */
enum GuiderStatus guider_nav_predict(const struct GuiderNav *nav, struct GuiderPrediction *out);

/**
 * Copy one layer (row-major, `width * height` values) into `out`.
 *
 * # Safety
 * `nav` must be a live handle and `out` must hold `len` doubles.
 */
enum GuiderStatus guider_nav_layer(const struct GuiderNav *nav,
                                   uint32_t layer,
                                   double *out,
                                   size_t len);

/**
 * Track `n` object proposals: `centroids` holds `3n` coordinates in the TCP
 * frame, `g` the initial beliefs. `config` may be null.
 *
 * # Safety
 * Pointers must cover `3n` and `n` doubles; `out` must be writable.
 */
enum GuiderStatus guider_eef_new(const double *centroids,
                                 const double *g,
                                 size_t n,
                                 const char *config,
                                 struct GuiderEef **out);

/**
 * Release a tracker handle. Null is ignored.
 *
 * # Safety
 * `eef` must come from [`guider_eef_new`] and not be used afterwards.
 */
void guider_eef_free(struct GuiderEef *eef);

/**
 * Advance the tracker to a TCP sample (position, velocity, acceleration).
 *
 * # Safety
 * `eef` must be a live handle; `q`, `qd`, `qdd` must each hold 3 doubles.
 */
enum GuiderStatus guider_eef_observe(struct GuiderEef *eef,
                                     double t,
                                     const double *q,
                                     const double *qd,
                                     const double *qdd);

/**
 * Copy the current beliefs (one per proposal, in proposal order).
 *
 * # Safety
 * `eef` must be a live handle and `out` must hold `len` doubles.
 */
enum GuiderStatus guider_eef_beliefs(const struct GuiderEef *eef, double *out, size_t len);

/**
 * Index of the most likely object.
 *
 * # Safety
 * `eef` must be a live handle and `out` writable.
 */
enum GuiderStatus guider_eef_top(const struct GuiderEef *eef, size_t *out);

/**
 * Run the three grasp tests on one row-major silhouette (non-zero = set)
 * seen at depth `z` metres with focal length `fx` pixels.
 *
 * # Safety
 * `mask` must hold `width * height` bytes and `out` must be writable.
 */
enum GuiderStatus guider_grasp_assess(const uint8_t *mask,
                                      size_t width,
                                      size_t height,
                                      double z,
                                      double fx,
                                      const char *config,
                                      struct GuiderGraspVerdict *out);

/**
 * Exact paired signed-rank test on `x[i] - y[i]`.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles and `out` must be writable.
 */
enum GuiderStatus guider_wilcoxon(const double *x,
                                  const double *y,
                                  size_t n,
                                  uint32_t alternative,
                                  struct GuiderWilcoxon *out);

/**
 * RTCP and stability of a prediction timeline. `predicted[i] < 0` means no
 * prediction at `t[i]`.
 *
 * # Safety
 * `t` and `predicted` must hold `n` values and `out` must be writable.
 */
enum GuiderStatus guider_metrics(const double *t,
                                 const int64_t *predicted,
                                 size_t n,
                                 size_t truth,
                                 double contact_t,
                                 double hold,
                                 struct GuiderMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GUIDER_H */
