#ifndef IPP_FFI_H
#define IPP_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes mirrored from the library error type.
 */
typedef enum IppStatus {
  IppStatus_Ok = 0,
  IppStatus_InvalidArgument = 1,
  IppStatus_OutOfRange = 2,
  IppStatus_Numerical = 3,
  IppStatus_Config = 4,
  IppStatus_Io = 5,
  IppStatus_NullPointer = 6,
  IppStatus_Panic = 7,
} IppStatus;

/**
 * Opaque continuous field map with the default survey camera and
 * altitude-dependent sensor model.
 */
typedef struct IppGpMap IppGpMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message for this thread into `buf` (NUL
 * terminated, truncated to `cap` bytes). Returns the full message length
 * in bytes, excluding the terminator.
 */
uintptr_t ipp_last_error(char *buf, uintptr_t cap);

/**
 * Parse a TOML experiment config and run every declared (planner, trial)
 * pair, writing CSVs and a manifest into `out_dir`.
 */
enum IppStatus ipp_run_experiment(const char *config_toml, const char *out_dir);

/**
 * Build a field map prior over a grid with the given Matern 3/2
 * hyperparameters and uniform prior mean. The handle is returned through
 * `out` and owned by the caller.
 */
enum IppStatus ipp_gp_map_new(double origin_x,
                              double origin_y,
                              double extent_x,
                              double extent_y,
                              double resolution,
                              double sigma_f2,
                              double length_scale,
                              double sigma_n2,
                              double prior_mean,
                              struct IppGpMap **out);

void ipp_gp_map_free(struct IppGpMap *map);

/**
 * Number of grid cells (row-major indexing).
 */
enum IppStatus ipp_gp_map_cell_count(const struct IppGpMap *map, uintptr_t *out);

/**
 * Posterior mean of one cell.
 */
enum IppStatus ipp_gp_map_mean(const struct IppGpMap *map, uintptr_t cell, double *out);

/**
 * Posterior variance of one cell.
 */
enum IppStatus ipp_gp_map_variance(const struct IppGpMap *map, uintptr_t cell, double *out);

/**
 * Trace of the posterior covariance (total map uncertainty).
 */
enum IppStatus ipp_gp_map_trace(const struct IppGpMap *map, double *out);

/**
 * Number of measurement blocks a camera frame at this pose produces;
 * `ipp_gp_map_fuse` expects exactly this many values.
 */
enum IppStatus ipp_gp_map_patch_size(const struct IppGpMap *map,
                                     double x,
                                     double y,
                                     double z,
                                     uintptr_t *out);

/**
 * Fuse one camera frame taken at (x, y, z): `values` holds the measured
 * block means, in row-major block order, with the noise variance implied
 * by the altitude.
 */
enum IppStatus ipp_gp_map_fuse(struct IppGpMap *map,
                               double x,
                               double y,
                               double z,
                               const double *values,
                               uintptr_t len);

/**
 * Covariance-only update for a hypothetical frame at (x, y, z): the mean
 * stays put while uncertainty shrinks as if the frame had been taken.
 */
enum IppStatus ipp_gp_map_predict_fuse(struct IppGpMap *map, double x, double y, double z);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPP_FFI_H */
