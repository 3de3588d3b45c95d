#ifndef BICM_H
#define BICM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define BICM_LABELING_GRAY 0

#define BICM_LABELING_SP 1

#define BICM_VARIANT_ORIG 0

#define BICM_VARIANT_I 1

#define BICM_VARIANT_II 2

#define BICM_CHANNEL_AWGN 0

#define BICM_CHANNEL_RAYLEIGH 1

typedef enum BicmStatus {
  BICM_STATUS_OK = 0,
  BICM_STATUS_NULL_POINTER = 1,
  BICM_STATUS_INVALID_ARGUMENT = 2,
  BICM_STATUS_UNSUPPORTED_GEOMETRY = 3,
  BICM_STATUS_NUMERICAL = 4,
  BICM_STATUS_INCONCLUSIVE = 5,
  BICM_STATUS_PANIC = 6,
} BicmStatus;

/**
 * Opaque labeled constellation.
 */
typedef struct BicmConstellation BicmConstellation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *bicm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bicm_version(void);

/**
 * Builds a constellation by name (`4PSK`, `8PSK`, `4QAM`, `16QAM`, `64QAM`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BicmStatus bicm_constellation_new(const char *name,
                                       uint32_t labeling_code,
                                       struct BicmConstellation **out);

/**
 * Releases a handle from [`bicm_constellation_new`]. Null is ignored.
 *
 * # Safety
 * `c` must be null or a handle not yet freed.
 */
void bicm_constellation_free(struct BicmConstellation *c);

/**
 * Number of points and bits per label.
 *
 * # Safety
 * `c` must be a live handle; `points` and `bits` valid pointers.
 */
enum BicmStatus bicm_constellation_size(const struct BicmConstellation *c,
                                        size_t *points,
                                        size_t *bits);

/**
 * Coordinates and label of point `idx`.
 *
 * # Safety
 * `c` must be a live handle; output pointers valid.
 */
enum BicmStatus bicm_constellation_point(const struct BicmConstellation *c,
                                         size_t idx,
                                         double *re,
                                         double *im,
                                         uint32_t *label);

/**
 * Harmonic mean squared neighbor distance under a variant.
 *
 * # Safety
 * `c` must be a live handle; `out` a valid pointer.
 */
enum BicmStatus bicm_harmonic_distance(const struct BicmConstellation *c,
                                       uint32_t variant_code,
                                       double *out);

/**
 * Expurgated bound `f(d)` on the subset decision error for Hamming distance `d`.
 *
 * # Safety
 * `c` must be a live handle; `out` a valid pointer.
 */
enum BicmStatus bicm_f_bound(const struct BicmConstellation *c,
                             uint32_t variant_code,
                             uint32_t channel_code,
                             double es_n0_db,
                             uint32_t d,
                             double *out);

/**
 * Pairwise error probability for the squared distances `d2[0..len]`.
 *
 * # Safety
 * `d2` must point to `len` readable values; `out` a valid pointer.
 */
enum BicmStatus bicm_pep_exact(uint32_t channel_code,
                               double es_n0_db,
                               const double *d2,
                               size_t len,
                               double *out);

/**
 * BER union bound for the (133, 171) code, summed up to `d_max`.
 * `truncation` receives the share of the last term.
 *
 * # Safety
 * `c` must be a live handle; `out` a valid pointer; `truncation` may be null.
 */
enum BicmStatus bicm_ber_bound(const struct BicmConstellation *c,
                               uint32_t variant_code,
                               uint32_t channel_code,
                               double es_n0_db,
                               uint32_t d_max,
                               double *out,
                               double *truncation);

/**
 * Grid check of the rotated-QPSK expurgation counterexample.
 *
 * # Safety
 * `confirmed` must be a valid pointer.
 */
enum BicmStatus bicm_verify_theorem1(double theta_deg, double grid_step, bool *confirmed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BICM_H */
