#ifndef POLARITON_H
#define POLARITON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PolaritonStatus {
  POLARITON_STATUS_OK = 0,
  POLARITON_STATUS_NULL_POINTER = 1,
  POLARITON_STATUS_INVALID_ARGUMENT = 2,
  POLARITON_STATUS_CONFIG = 3,
  POLARITON_STATUS_NUMERICAL = 4,
  POLARITON_STATUS_IO = 5,
  POLARITON_STATUS_OVERFLOW = 6,
  POLARITON_STATUS_OUT_OF_RANGE = 7,
  POLARITON_STATUS_PANIC = 8,
} PolaritonStatus;

typedef enum PolaritonGroup {
  POLARITON_GROUP_GROUND = 0,
  POLARITON_GROUP_DARK = 1,
  POLARITON_GROUP_MULTI_POLARITON = 2,
  POLARITON_GROUP_DARK_POLARITON = 3,
  POLARITON_GROUP_UNCLASSIFIED = 4,
} PolaritonGroup;

/**
 * Series selectors for [`polariton_trajectory_series`].
 */
typedef enum PolaritonSeries {
  POLARITON_SERIES_TIME = 0,
  POLARITON_SERIES_GROUP = 1,
  POLARITON_SERIES_PURITY = 2,
  POLARITON_SERIES_PHOTON_NUMBER = 3,
  POLARITON_SERIES_E_NUMBER = 4,
  POLARITON_SERIES_T_NUMBER = 5,
  POLARITON_SERIES_EXCITATION_NUMBER = 6,
} PolaritonSeries;

/**
 * Classified spectrum.
 */
typedef struct PolaritonSpectrum PolaritonSpectrum;

/**
 * Population trajectory.
 */
typedef struct PolaritonTrajectory PolaritonTrajectory;

/**
 * Model parameters in eV.
 */
typedef struct PolaritonParameters {
  uint32_t n_molecules;
  double omega_eg;
  double omega_c;
  double g_c;
  double omega_tg;
  double c_et;
} PolaritonParameters;

/**
 * One classified eigenstate. `s_doubled` is 2S, or -1 when S is not a
 * good quantum number.
 */
typedef struct PolaritonEigenstate {
  double eigenvalue;
  double relative_shift;
  uint32_t n_exc;
  double photon_frac;
  double t_frac;
  int32_t s_doubled;
  enum PolaritonGroup group;
} PolaritonEigenstate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t polariton_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *polariton_version(void);

/**
 * Resonant defaults for `n_molecules`: cavity and transition at 4.3 eV,
 * collective coupling 0.5 eV, `t` at 3.9 eV with `c_et` = 0.05 eV.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum PolaritonStatus polariton_default_parameters(uint32_t n_molecules,
                                                  struct PolaritonParameters *out);

/**
 * Diagonalizes the model (`levels` 2 or 3) up to `n_max` excitations and
 * classifies every eigenstate.
 *
 * # Safety
 * `params` must be valid for reads and `out` valid for writes.
 */
enum PolaritonStatus polariton_spectrum_new(const struct PolaritonParameters *params,
                                            uint8_t levels,
                                            uint32_t n_max,
                                            struct PolaritonSpectrum **out);

/**
 * Number of eigenstates, or 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t polariton_spectrum_len(const struct PolaritonSpectrum *spectrum);

/**
 * # Safety
 * `spectrum` must be a live handle and `out` valid for writes.
 */
enum PolaritonStatus polariton_spectrum_get(const struct PolaritonSpectrum *spectrum,
                                            size_t index,
                                            struct PolaritonEigenstate *out);

/**
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void polariton_spectrum_free(struct PolaritonSpectrum *spectrum);

/**
 * Runs the dynamics described by a TOML scenario document (same schema
 * as the command line tool). Nothing is written to disk.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` valid for writes.
 */
enum PolaritonStatus polariton_trajectory_run(const char *config_toml,
                                              struct PolaritonTrajectory **out);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t polariton_trajectory_samples(const struct PolaritonTrajectory *traj);

/**
 * Number of population groups, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t polariton_trajectory_groups(const struct PolaritonTrajectory *traj);

/**
 * Column name of group `index` (for example `N3_dark`), valid until the
 * handle is freed.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
const char *polariton_trajectory_group_name(const struct PolaritonTrajectory *traj, size_t index);

/**
 * Copies one series (a [`PolaritonSeries`] value) into `buf`, which must
 * hold `polariton_trajectory_samples` values. `group` is only read for
 * `POLARITON_SERIES_GROUP`.
 *
 * # Safety
 * `traj` must be a live handle and `buf` valid for `len` writes.
 */
enum PolaritonStatus polariton_trajectory_series(const struct PolaritonTrajectory *traj,
                                                 uint32_t series,
                                                 size_t group,
                                                 double *buf,
                                                 size_t len);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void polariton_trajectory_free(struct PolaritonTrajectory *traj);

/**
 * Number of dark states with `n_x` excitations among `n` molecules.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PolaritonStatus polariton_dark_state_count(uint64_t n, uint64_t n_x, uint64_t *out);

/**
 * Ratio of dark-polariton progenitors in sector `s_doubled / 2` to the
 * dark states of manifold `n_x`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PolaritonStatus polariton_dark_polariton_ratio(uint64_t n,
                                                    uint64_t n_x,
                                                    uint32_t s_doubled,
                                                    double *out);

/**
 * Rabi splitting in eV for coupling `g_c`, cooperation number
 * `s_doubled / 2` and detuning `delta`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PolaritonStatus polariton_rabi_splitting(double g_c,
                                              uint32_t s_doubled,
                                              double delta,
                                              double *out);

/**
 * Splitting of the lowest dark-polariton sector relative to the
 * symmetric one at relative excitation `c`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PolaritonStatus polariton_relative_rabi(double c, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLARITON_H */
