// Copyright 2026 The biglearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef BIGLEARN_BIGLEARN_H_
#define BIGLEARN_BIGLEARN_H_

/* C interface of the biglearn engine.
 *
 * Objects are opaque handles released with their *_free function. Functions
 * return a bl_status; on failure, bl_last_error() describes the problem for
 * the calling thread until its next failing call. Matrices are row-major.
 * Strings returned through char** are released with bl_string_free.
 */

#include <stdint.h>

#if defined(_WIN32)
#define BL_API
#elif defined(BIGLEARN_BUILDING_LIBRARY)
#define BL_API __attribute__((visibility("default")))
#else
#define BL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bl_status {
  BL_OK = 0,
  BL_ERR_INVALID_ARGUMENT = 1,
  BL_ERR_CONFIG = 2,
  BL_ERR_NUMERICAL = 3,
  BL_ERR_TRAINING_ABORT = 4,
  BL_ERR_UNSUPPORTED = 5,
  BL_ERR_IO = 6,
  BL_ERR_INTERNAL = 7
} bl_status;

typedef enum bl_command {
  BL_COMMAND_ANY = 0, /* whatever section the config holds */
  BL_COMMAND_SURFACE = 1,
  BL_COMMAND_TRAIN = 2,
  BL_COMMAND_EVAL = 3
} bl_command;

typedef struct bl_gmm bl_gmm;
typedef struct bl_rng bl_rng;

BL_API const char* bl_version(void);
BL_API const char* bl_last_error(void);
BL_API const char* bl_status_name(bl_status status);
BL_API void bl_string_free(char* s);

BL_API bl_status bl_rng_create(uint64_t seed, bl_rng** out);
BL_API void bl_rng_free(bl_rng* rng);

/* weights: k; means: k x d; scales: k blocks of d x d lower-triangular
 * Cholesky factors with positive diagonals. */
BL_API bl_status bl_gmm_create(int k, int d, const double* weights, const double* means, const double* scales,
                               bl_gmm** out);
/* covariances: k blocks of d x d symmetric positive-definite matrices. */
BL_API bl_status bl_gmm_from_covariances(int k, int d, const double* weights, const double* means,
                                         const double* covariances, bl_gmm** out);
BL_API bl_status bl_gmm_from_text(const char* text, bl_gmm** out);
BL_API bl_status bl_gmm_to_text(const bl_gmm* g, char** out);
BL_API void bl_gmm_free(bl_gmm* g);

BL_API int bl_gmm_dim(const bl_gmm* g);
BL_API int bl_gmm_components(const bl_gmm* g);
/* Copy-out accessors sized k, k x d and k x d x d. */
BL_API bl_status bl_gmm_weights(const bl_gmm* g, double* out);
BL_API bl_status bl_gmm_means(const bl_gmm* g, double* out);
BL_API bl_status bl_gmm_scales(const bl_gmm* g, double* out);

/* points: n x d; out: n log densities. */
BL_API bl_status bl_gmm_log_density(const bl_gmm* g, const double* points, int n, double* out);
BL_API bl_status bl_gmm_marginalize(const bl_gmm* g, const int* indices, int count, bl_gmm** out);
/* Conditional of the t-coordinates given values on the s-coordinates. */
BL_API bl_status bl_gmm_condition(const bl_gmm* g, const int* s, int s_count, const double* values, const int* t,
                                  int t_count, bl_gmm** out);
/* a: rows x d with full row rank. */
BL_API bl_status bl_gmm_linear_transform(const bl_gmm* g, const double* a, int rows, bl_gmm** out);
BL_API bl_status bl_gmm_convolve_gaussian(const bl_gmm* g, double noise_var, bl_gmm** out);
/* points: n x d; components may be NULL. */
BL_API bl_status bl_gmm_sample(const bl_gmm* g, int n, bl_rng* rng, double* points, int* components);

/* Midpoint quadrature on the default bounds (component means +- 8 marginal
 * standard deviations) with `points` cells per axis; dimension <= 2. */
BL_API bl_status bl_kl_grid(const bl_gmm* p, const bl_gmm* q, int points, double* out);
BL_API bl_status bl_js_grid(const bl_gmm* p, const bl_gmm* q, int points, double* out);
BL_API bl_status bl_kl_mc(const bl_gmm* p, const bl_gmm* q, int n, bl_rng* rng, double* estimate,
                          double* std_error);

typedef struct bl_run_options {
  const char* config_path; /* required */
  const char* out_dir;     /* NULL or "": runs/<config stem> */
  int has_seed;            /* nonzero: `seed` overrides the config */
  uint64_t seed;
  int threads; /* <= 0 means 1 */
} bl_run_options;

/* Runs a config end to end. *exit_code receives the process exit code
 * (0 ok, 2 config error, 3 numerical failure in a sweep, 4 training abort,
 * 1 other). bl_last_run_message() and bl_last_run_out_dir() describe the
 * most recent run on the calling thread. */
BL_API bl_status bl_run(const bl_run_options* options, bl_command command, int* exit_code);
BL_API const char* bl_last_run_message(void);
BL_API const char* bl_last_run_out_dir(void);

#ifdef __cplusplus
}
#endif

#endif /* BIGLEARN_BIGLEARN_H_ */
