/* C interface to the mfinfo library. All handles are opaque; every fallible
 * call returns an mfi_status and leaves a message for mfi_last_error(). */
#ifndef MFINFO_MFINFO_H
#define MFINFO_MFINFO_H

#include <stddef.h>
#include <stdint.h>

#if defined(MFINFO_BUILDING_LIBRARY)
#define MFI_API __attribute__((visibility("default")))
#else
#define MFI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mfi_status {
  MFI_OK = 0,
  MFI_ERR_INVALID_ARGUMENT = 1,
  MFI_ERR_CONFIG = 2,
  MFI_ERR_EVALUATION = 3,
  MFI_ERR_DEGENERATE = 4,
  MFI_ERR_CONVERGENCE = 5,
  MFI_ERR_CONDITIONING = 6,
  MFI_ERR_DOMAIN = 7,
  MFI_ERR_IO = 8,
  MFI_ERR_INTERNAL = 9
} mfi_status;

typedef struct mfi_activation mfi_activation;
typedef struct mfi_network mfi_network;
typedef struct mfi_sweep_config mfi_sweep_config;
typedef struct mfi_sweep_result mfi_sweep_result;
typedef struct mfi_string mfi_string;

/* Called after every finished grid cell; must be thread-safe when the
 * sweep runs with several workers. */
typedef void (*mfi_progress_fn)(int done, int total, void* user);

MFI_API const char* mfi_version(void);
/* Message of the last failed call on this thread ("" if none). */
MFI_API const char* mfi_last_error(void);
MFI_API const char* mfi_status_string(mfi_status status);

/* Owned strings returned by report functions. */
MFI_API const char* mfi_string_data(const mfi_string* s);
MFI_API size_t mfi_string_size(const mfi_string* s);
MFI_API void mfi_string_destroy(mfi_string* s);

/* ---- activations ------------------------------------------------------ */

/* name: "tanh", "scaled_tanh" (psi = a tanh(b z)), "erf" or "linear". */
MFI_API mfi_status mfi_activation_create(const char* name, double a, double b, mfi_activation** out);
MFI_API void mfi_activation_destroy(mfi_activation* act);
MFI_API mfi_status mfi_activation_eval(const mfi_activation* act, double z, double* value,
                                       double* derivative);

/* ---- mean-field quantities --------------------------------------------- */
/* quadrature_order <= 0 selects the default rule. */

typedef struct mfi_fixed_point {
  double q_star;
  double residual;
  int iterations;
  int converged;
} mfi_fixed_point;

MFI_API mfi_status mfi_fixed_point_solve(const mfi_activation* act, double sigma_w, double sigma_b,
                                         int quadrature_order, mfi_fixed_point* out);
MFI_API mfi_status mfi_beta(const mfi_activation* act, double sigma_w, double sigma_b,
                            int quadrature_order, double* out);
MFI_API mfi_status mfi_zeta(const mfi_activation* act, double sigma_w, double sigma_b,
                            int quadrature_order, double* out);
MFI_API mfi_status mfi_correlation_map(const mfi_activation* act, double sigma_w, double sigma_b,
                                       double c, int quadrature_order, double* out);
MFI_API mfi_status mfi_di_point(const mfi_activation* act, double* sigma_w, double* sigma_b);

/* For each sigma_w_grid[k], sigma_b_out[k] is the edge-of-chaos bias and
 * found[k] is 1, or sigma_b_out[k] is NaN and found[k] is 0 when no root
 * was bracketed on [0, sigma_b_max]. */
MFI_API mfi_status mfi_eoc_curve(const mfi_activation* act, const double* sigma_w_grid, size_t n,
                                 double sigma_b_max, int quadrature_order, double* sigma_b_out,
                                 int* found);

/* ---- Jacobian spectra --------------------------------------------------- */

typedef enum mfi_init { MFI_INIT_GAUSSIAN = 0, MFI_INIT_ORTHOGONAL = 1 } mfi_init;

typedef struct mfi_spectrum_moments {
  double m1;
  double m2;
  double mu1;
  double mu2;
  double s1;
  int depth;
} mfi_spectrum_moments;

typedef struct mfi_moment_estimate {
  double m1_mean;
  double m1_stderr;
  double m2_mean;
  double m2_stderr;
  int realizations;
} mfi_moment_estimate;

MFI_API mfi_status mfi_jacobian_moments(const mfi_activation* act, double sigma_w, double sigma_b,
                                        int depth, mfi_init init, int quadrature_order,
                                        mfi_spectrum_moments* out);
MFI_API mfi_status mfi_sample_jacobian_moments(const mfi_activation* act, double sigma_w,
                                               double sigma_b, int depth, int width, mfi_init init,
                                               int realizations, uint64_t seed,
                                               mfi_moment_estimate* out);

/* widths holds depth + 1 entries, N_0 first. */
MFI_API mfi_status mfi_network_create(int depth, const int* widths, double sigma_w, double sigma_b,
                                      mfi_init init, uint64_t seed, mfi_network** out);
MFI_API void mfi_network_destroy(mfi_network* net);
/* Singular values of the input-output Jacobian at `input` (length N_0), in
 * decreasing order. *count receives the number of values; nothing is
 * written when capacity is too small (MFI_ERR_INVALID_ARGUMENT). */
MFI_API mfi_status mfi_network_jacobian_spectrum(const mfi_network* net, const mfi_activation* act,
                                                 const double* input, size_t input_len,
                                                 double* values, size_t capacity, size_t* count);

/* ---- information bounds -------------------------------------------------- */

/* Gaussian mutual information (nats) from a column-major (n0 + nl) square
 * joint covariance, with relative jitter added to both diagonal blocks. */
MFI_API mfi_status mfi_mi_from_joint(const double* joint, size_t n0, size_t nl, double jitter,
                                     double* out);

/* ---- sweeps --------------------------------------------------------------- */

MFI_API mfi_status mfi_sweep_config_create(mfi_sweep_config** out);
MFI_API void mfi_sweep_config_destroy(mfi_sweep_config* cfg);
/* Merges a flat JSON object of config keys into cfg. */
MFI_API mfi_status mfi_sweep_config_set_json(mfi_sweep_config* cfg, const char* json);
/* Merges the keys of a JSON config file into cfg. */
MFI_API mfi_status mfi_sweep_config_load(mfi_sweep_config* cfg, const char* path);
MFI_API mfi_status mfi_sweep_config_validate(const mfi_sweep_config* cfg);
MFI_API mfi_status mfi_sweep_config_to_json(const mfi_sweep_config* cfg, mfi_string** out);

typedef struct mfi_sweep_row {
  double sigma_w;
  double sigma_b;
  double value;
  double stderr_value;
  unsigned flags;
} mfi_sweep_row;

MFI_API mfi_status mfi_sweep_run(const mfi_sweep_config* cfg, mfi_progress_fn progress, void* user,
                                 mfi_sweep_result** out);
MFI_API void mfi_sweep_result_destroy(mfi_sweep_result* result);
MFI_API size_t mfi_sweep_result_size(const mfi_sweep_result* result);
MFI_API mfi_status mfi_sweep_result_row(const mfi_sweep_result* result, size_t index,
                                        mfi_sweep_row* out);
MFI_API mfi_status mfi_sweep_result_csv(const mfi_sweep_result* result, mfi_string** out);
/* Writes the CSV to path and the provenance sidecar to path + ".json". */
MFI_API mfi_status mfi_sweep_result_write(const mfi_sweep_result* result, const char* path);
/* Text form of a flag bitmask, e.g. "degenerate|floored_input". */
MFI_API mfi_status mfi_flags_string(unsigned flags, mfi_string** out);

/* MI along the edge of chaos as CSV (comment lines start with '#'). */
MFI_API mfi_status mfi_eoc_profile_csv(const mfi_sweep_config* cfg, mfi_progress_fn progress,
                                       void* user, mfi_string** out);
/* Pathology report (variance by width, histogram, recursion) as JSON. */
MFI_API mfi_status mfi_pathology_report_json(const mfi_sweep_config* cfg, mfi_string** out);

#ifdef __cplusplus
}
#endif

#endif
