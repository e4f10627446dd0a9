#ifndef LACT_H
#define LACT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  LACT_FILTER_RAM_LAK = 0,
  LACT_FILTER_HANN = 1,
  LACT_FILTER_NONE = 2,
} LactFilter;

typedef enum {
  LACT_SCHEDULE_KIND_CONSTANT = 0,
  LACT_SCHEDULE_KIND_COSINE = 1,
} LactScheduleKind;

typedef enum {
  LACT_STATUS_OK = 0,
  LACT_STATUS_INVALID_ARGUMENT = 1,
  LACT_STATUS_SHAPE_MISMATCH = 2,
  LACT_STATUS_NUMERIC = 3,
  LACT_STATUS_FORMAT = 4,
  LACT_STATUS_IO = 5,
  LACT_STATUS_NULL_POINTER = 6,
  LACT_STATUS_PANIC = 7,
} LactStatus;

typedef struct LactImage LactImage;

typedef struct LactMask LactMask;

typedef struct LactModel LactModel;

typedef struct LactSchedule LactSchedule;

typedef struct LactSinogram LactSinogram;

// Per-step rectification coefficients.
typedef struct {
  double lambda_t;
  double gamma_t;
  double h_t;
  double beta;
  double sigma_y;
} LactCoefficients;

// Guidance settings for [`lact_reconstruct`]; start from [`lact_guidance_default`].
typedef struct {
  double beta;
  double sigma_y_est;
  bool time_travel;
  size_t hop;
  size_t repeats;
  size_t rectify_every;
  bool rectify;
} LactGuidance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *lact_last_error(void);

// Copies `n_angles * n_detectors` row-major values. Angles are in degrees and
// must be strictly increasing.
LactStatus lact_sinogram_new(const double *angles,
                             size_t n_angles,
                             size_t n_detectors,
                             const double *data,
                             LactSinogram **out);

size_t lact_sinogram_n_angles(const LactSinogram *s);

size_t lact_sinogram_n_detectors(const LactSinogram *s);

// Copies the values into `dst`, which must hold exactly `len` entries.
LactStatus lact_sinogram_copy_data(const LactSinogram *s, double *dst, size_t len);

void lact_sinogram_free(LactSinogram *s);

LactStatus lact_image_new(size_t width, size_t height, const double *data, LactImage **out);

size_t lact_image_width(const LactImage *img);

size_t lact_image_height(const LactImage *img);

LactStatus lact_image_copy_data(const LactImage *img, double *dst, size_t len);

void lact_image_free(LactImage *img);

// `measured[i] != 0` marks row `i` of the full angle grid as measured.
LactStatus lact_mask_new(const double *angles, const uint8_t *measured, size_t n, LactMask **out);

size_t lact_mask_measured_count(const LactMask *m);

void lact_mask_free(LactMask *m);

LactStatus lact_schedule_new(size_t steps,
                             double lambda,
                             LactScheduleKind kind,
                             double zeta_total,
                             LactSchedule **out);

size_t lact_schedule_steps(const LactSchedule *s);

void lact_schedule_free(LactSchedule *s);

// Model that always returns a copy of `truth` as the clean estimate.
LactStatus lact_model_oracle(const LactSinogram *truth, LactModel **out);

// Loads a linear denoiser written by `lact fit`. `path` is UTF-8.
LactStatus lact_model_load_linear(const char *path, LactModel **out);

void lact_model_free(LactModel *m);

LactStatus lact_radon(const LactImage *img,
                      const double *angles,
                      size_t n_angles,
                      size_t n_detectors,
                      LactSinogram **out);

LactStatus lact_fbp(const LactSinogram *sino, LactFilter filter, size_t out_size, LactImage **out);

LactStatus lact_coefficients(const LactSchedule *sched,
                             size_t t,
                             double beta,
                             double sigma_y,
                             LactCoefficients *out);

// Applies the range-space correction with the gain in `coeffs->lambda_t`.
LactStatus lact_rnsd_plus(const LactSinogram *x0_hat,
                          const LactSinogram *y,
                          const LactMask *mask,
                          const LactCoefficients *coeffs,
                          LactSinogram **out);

LactGuidance lact_guidance_default(void);

// Guided sinogram completion. `mu` may be null, in which case `y` is used.
LactStatus lact_reconstruct(const LactSinogram *y,
                            const LactSinogram *mu,
                            const LactMask *mask,
                            const LactModel *model,
                            const LactSchedule *sched,
                            const LactGuidance *guidance,
                            uint64_t seed,
                            LactSinogram **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LACT_H */
