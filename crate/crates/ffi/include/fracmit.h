#ifndef FRACMIT_H
#define FRACMIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_ARGUMENT = 2,
  // The mitigator hit its iteration cap.
  FM_STATUS_NON_TERMINATION = 3,
  // File access or a malformed cache file.
  FM_STATUS_IO = 4,
  FM_STATUS_PANIC = 5,
} FmStatus;

// Opaque centered-DFT eigenbasis.
typedef struct FmBasis FmBasis;

// Opaque mitigator bound to one chirp length.
typedef struct FmMitigator FmMitigator;

typedef struct FmComplex {
  double re;
  double im;
} FmComplex;

typedef struct FmMitigatorConfig {
  size_t m_angles;
  double alpha_max_deg;
  size_t guard_cells;
  // CFAR window per side; 0 picks the largest window that fits.
  size_t window_size;
  double threshold_db;
  // Zero-pad before the search and crop/low-pass afterwards.
  bool pad;
  // Padded length; 0 picks the default for the chirp length.
  size_t padded_length;
  double gamma;
  // Iteration cap; 0 uses the working length.
  size_t max_iterations;
} FmMitigatorConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success. Valid
// until the next call on the same thread.
const char *fm_last_error(void);

// Builds the eigenbasis of size `n_samples`.
//
// # Safety
// `out` must be a valid pointer. The handle must be released with [`fm_basis_free`].
enum FmStatus fm_basis_new(size_t n_samples, struct FmBasis **out);

// Loads a basis from a cache file written by [`fm_basis_save`].
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum FmStatus fm_basis_load(const char *path, struct FmBasis **out);

// # Safety
// `basis` must come from this library; `path` must be NUL-terminated.
enum FmStatus fm_basis_save(const struct FmBasis *basis, const char *path);

// Basis size, or 0 for a null handle.
//
// # Safety
// `basis` must be null or come from this library.
size_t fm_basis_len(const struct FmBasis *basis);

// # Safety
// `basis` must be null or an unfreed handle from this library.
void fm_basis_free(struct FmBasis *basis);

// Fractional transform at `angle_deg`. `input` and `output` hold `len` samples,
// which must equal the basis size. They may not overlap.
//
// # Safety
// Pointers must be valid for `len` elements.
enum FmStatus fm_dfrft(const struct FmBasis *basis,
                       const struct FmComplex *input,
                       size_t len,
                       double angle_deg,
                       struct FmComplex *output);

// Transforms at all `m_angles` grid angles `360°·m/M`. `output` receives
// `m_angles × len` samples, one angle per row.
//
// # Safety
// `input` must be valid for `len` elements and `output` for `m_angles·len`.
enum FmStatus fm_multi_angle(const struct FmBasis *basis,
                             const struct FmComplex *input,
                             size_t len,
                             size_t m_angles,
                             struct FmComplex *output);

// Modeled FFT cost of a multi-angle transform.
//
// # Safety
// `out` must be a valid pointer.
enum FmStatus fm_fft_op_count(size_t n_samples, size_t m_angles, uint64_t *out);

struct FmMitigatorConfig fm_default_config(void);

// Validates `config` for chirps of `n_samples` and builds (or reuses) the basis.
//
// # Safety
// `config` and `out` must be valid pointers. Release with [`fm_mitigator_free`].
enum FmStatus fm_mitigator_new(const struct FmMitigatorConfig *config,
                               size_t n_samples,
                               struct FmMitigator **out);

// Mitigates one chirp of `len` samples and writes its `len`-bin range spectrum.
// `detections` (nullable) receives the number of zeroing steps.
//
// # Safety
// Pointers must be valid for `len` elements; `mitigator` must come from this library.
enum FmStatus fm_mitigator_process(const struct FmMitigator *mitigator,
                                   const struct FmComplex *input,
                                   size_t len,
                                   struct FmComplex *spectrum,
                                   size_t *detections);

// # Safety
// `mitigator` must be null or an unfreed handle from this library.
void fm_mitigator_free(struct FmMitigator *mitigator);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACMIT_H */
