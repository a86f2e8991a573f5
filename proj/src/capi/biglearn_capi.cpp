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


#include "biglearn/biglearn.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "core/commands.hpp"
#include "core/divergence.hpp"
#include "core/error.hpp"
#include "core/gmm.hpp"
#include "core/random.hpp"

struct bl_gmm {
  biglearn::Gmm g;
};

struct bl_rng {
  biglearn::Rng rng;
};

namespace {

using biglearn::ErrorKind;
using biglearn::Gmm;
using biglearn::MatrixXd;
using biglearn::VectorXd;

thread_local std::string last_error;
thread_local std::string last_run_message;
thread_local std::string last_run_out_dir;

bl_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return BL_ERR_INVALID_ARGUMENT;
    case ErrorKind::kConfig: return BL_ERR_CONFIG;
    case ErrorKind::kNumerical: return BL_ERR_NUMERICAL;
    case ErrorKind::kTrainingAbort: return BL_ERR_TRAINING_ABORT;
    case ErrorKind::kUnsupported: return BL_ERR_UNSUPPORTED;
    case ErrorKind::kIo: return BL_ERR_IO;
  }
  return BL_ERR_INTERNAL;
}

bl_status fail_with(bl_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
bl_status guarded(F&& body) {
  try {
    body();
    return BL_OK;
  } catch (const biglearn::Error& e) {
    return fail_with(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(BL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(BL_ERR_INTERNAL, e.what());
  }
}

void need(bool ok, const char* what) {
  if (!ok) biglearn::fail(ErrorKind::kInvalidArgument, what);
}

std::vector<VectorXd> read_means(int k, int d, const double* means) {
  std::vector<VectorXd> out(k);
  for (int i = 0; i < k; ++i) out[i] = Eigen::Map<const VectorXd>(means + static_cast<std::ptrdiff_t>(i) * d, d);
  return out;
}

std::vector<MatrixXd> read_blocks(int k, int d, const double* blocks) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<MatrixXd> out(k);
  for (int i = 0; i < k; ++i) out[i] = Eigen::Map<const RowMajor>(blocks + static_cast<std::ptrdiff_t>(i) * d * d, d, d);
  return out;
}

biglearn::IndexSet read_indices(const int* idx, int n) {
  need(n >= 0 && (n == 0 || idx), "index array is NULL");
  return biglearn::IndexSet(std::vector<int>(idx, idx + n));
}

void emit(bl_gmm** out, Gmm g) { *out = new bl_gmm{std::move(g)}; }

char* copy_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* bl_version(void) { return "0.1.0"; }

const char* bl_last_error(void) { return last_error.c_str(); }

const char* bl_status_name(bl_status status) {
  switch (status) {
    case BL_OK: return "ok";
    case BL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BL_ERR_CONFIG: return "config error";
    case BL_ERR_NUMERICAL: return "numerical failure";
    case BL_ERR_TRAINING_ABORT: return "training aborted";
    case BL_ERR_UNSUPPORTED: return "unsupported";
    case BL_ERR_IO: return "i/o error";
    case BL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void bl_string_free(char* s) { std::free(s); }

bl_status bl_rng_create(uint64_t seed, bl_rng** out) {
  return guarded([&] {
    need(out, "output pointer is NULL");
    *out = new bl_rng{biglearn::Rng(seed)};
  });
}

void bl_rng_free(bl_rng* rng) { delete rng; }

bl_status bl_gmm_create(int k, int d, const double* weights, const double* means, const double* scales, bl_gmm** out) {
  return guarded([&] {
    need(out && weights && means && scales, "NULL argument");
    need(k >= 1 && d >= 1, "k and d must be positive");
    emit(out, Gmm(Eigen::Map<const VectorXd>(weights, k), read_means(k, d, means), read_blocks(k, d, scales)));
  });
}

bl_status bl_gmm_from_covariances(int k, int d, const double* weights, const double* means, const double* covariances,
                                  bl_gmm** out) {
  return guarded([&] {
    need(out && weights && means && covariances, "NULL argument");
    need(k >= 1 && d >= 1, "k and d must be positive");
    emit(out, Gmm::from_covariances(Eigen::Map<const VectorXd>(weights, k), read_means(k, d, means),
                                    read_blocks(k, d, covariances)));
  });
}

bl_status bl_gmm_from_text(const char* text, bl_gmm** out) {
  return guarded([&] {
    need(out && text, "NULL argument");
    emit(out, biglearn::gmm_from_text(text));
  });
}

bl_status bl_gmm_to_text(const bl_gmm* g, char** out) {
  return guarded([&] {
    need(out && g, "NULL argument");
    *out = copy_string(biglearn::to_text(g->g));
  });
}

void bl_gmm_free(bl_gmm* g) { delete g; }

int bl_gmm_dim(const bl_gmm* g) { return g ? g->g.dim() : 0; }

int bl_gmm_components(const bl_gmm* g) { return g ? g->g.size() : 0; }

bl_status bl_gmm_weights(const bl_gmm* g, double* out) {
  return guarded([&] {
    need(g && out, "NULL argument");
    Eigen::Map<VectorXd>(out, g->g.size()) = g->g.weights();
  });
}

bl_status bl_gmm_means(const bl_gmm* g, double* out) {
  return guarded([&] {
    need(g && out, "NULL argument");
    const int d = g->g.dim();
    for (int i = 0; i < g->g.size(); ++i) Eigen::Map<VectorXd>(out + i * d, d) = g->g.mean(i);
  });
}

bl_status bl_gmm_scales(const bl_gmm* g, double* out) {
  return guarded([&] {
    need(g && out, "NULL argument");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const int d = g->g.dim();
    for (int i = 0; i < g->g.size(); ++i) Eigen::Map<RowMajor>(out + i * d * d, d, d) = g->g.scale(i);
  });
}

bl_status bl_gmm_log_density(const bl_gmm* g, const double* points, int n, double* out) {
  return guarded([&] {
    need(g && points && out, "NULL argument");
    need(n >= 0, "n must be nonnegative");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const MatrixXd x = Eigen::Map<const RowMajor>(points, n, g->g.dim());
    Eigen::Map<VectorXd>(out, n) = biglearn::log_density(g->g, x);
  });
}

bl_status bl_gmm_marginalize(const bl_gmm* g, const int* indices, int count, bl_gmm** out) {
  return guarded([&] {
    need(g && out, "NULL argument");
    emit(out, biglearn::marginalize(g->g, read_indices(indices, count)));
  });
}

bl_status bl_gmm_condition(const bl_gmm* g, const int* s, int s_count, const double* values, const int* t, int t_count,
                           bl_gmm** out) {
  return guarded([&] {
    need(g && out && (s_count == 0 || values), "NULL argument");
    const VectorXd x = s_count > 0 ? VectorXd(Eigen::Map<const VectorXd>(values, s_count)) : VectorXd();
    emit(out, biglearn::condition(g->g, read_indices(s, s_count), x, read_indices(t, t_count)));
  });
}

bl_status bl_gmm_linear_transform(const bl_gmm* g, const double* a, int rows, bl_gmm** out) {
  return guarded([&] {
    need(g && a && out, "NULL argument");
    need(rows >= 1, "rows must be positive");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    emit(out, biglearn::linear_transform(g->g, Eigen::Map<const RowMajor>(a, rows, g->g.dim())));
  });
}

bl_status bl_gmm_convolve_gaussian(const bl_gmm* g, double noise_var, bl_gmm** out) {
  return guarded([&] {
    need(g && out, "NULL argument");
    emit(out, biglearn::convolve_gaussian(g->g, noise_var));
  });
}

bl_status bl_gmm_sample(const bl_gmm* g, int n, bl_rng* rng, double* points, int* components) {
  return guarded([&] {
    need(g && rng && points, "NULL argument");
    const biglearn::GmmSample s = biglearn::sample(g->g, n, rng->rng);
    const int d = g->g.dim();
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < d; ++a) points[j * d + a] = s.points(j, a);
      if (components) components[j] = s.components[j];
    }
  });
}

bl_status bl_kl_grid(const bl_gmm* p, const bl_gmm* q, int points, double* out) {
  return guarded([&] {
    need(p && q && out, "NULL argument");
    *out = biglearn::kl_grid(p->g, q->g, biglearn::default_grid(p->g, q->g, points));
  });
}

bl_status bl_js_grid(const bl_gmm* p, const bl_gmm* q, int points, double* out) {
  return guarded([&] {
    need(p && q && out, "NULL argument");
    *out = biglearn::js_grid(p->g, q->g, biglearn::default_grid(p->g, q->g, points));
  });
}

bl_status bl_kl_mc(const bl_gmm* p, const bl_gmm* q, int n, bl_rng* rng, double* estimate, double* std_error) {
  return guarded([&] {
    need(p && q && rng && estimate, "NULL argument");
    const biglearn::McEstimate e = biglearn::kl_mc(p->g, q->g, n, rng->rng);
    *estimate = e.estimate;
    if (std_error) *std_error = e.std_error;
  });
}

bl_status bl_run(const bl_run_options* options, bl_command command, int* exit_code) {
  last_run_message.clear();
  last_run_out_dir.clear();
  if (exit_code) *exit_code = biglearn::kExitFailure;
  if (!options || !options->config_path) return fail_with(BL_ERR_INVALID_ARGUMENT, "config_path is required");
  biglearn::RunOptions opt;
  opt.config_path = options->config_path;
  opt.out_dir = options->out_dir ? options->out_dir : "";
  if (options->has_seed) opt.seed = options->seed;
  opt.threads = options->threads <= 0 ? 1 : options->threads;
  std::optional<biglearn::Command> expected;
  switch (command) {
    case BL_COMMAND_ANY: break;
    case BL_COMMAND_SURFACE: expected = biglearn::Command::kSurface; break;
    case BL_COMMAND_TRAIN: expected = biglearn::Command::kTrain; break;
    case BL_COMMAND_EVAL: expected = biglearn::Command::kEval; break;
    default: return fail_with(BL_ERR_INVALID_ARGUMENT, "unknown command");
  }
  const biglearn::RunReport report = biglearn::run_config(opt, expected);
  last_run_message = report.message;
  last_run_out_dir = report.out_dir;
  if (exit_code) *exit_code = report.exit_code;
  switch (report.exit_code) {
    case biglearn::kExitOk: return BL_OK;
    case biglearn::kExitConfig: return fail_with(BL_ERR_CONFIG, report.message);
    case biglearn::kExitNumerical: return fail_with(BL_ERR_NUMERICAL, report.message);
    case biglearn::kExitTrainingAbort: return fail_with(BL_ERR_TRAINING_ABORT, report.message);
    default: return fail_with(BL_ERR_IO, report.message);
  }
}

const char* bl_last_run_message(void) { return last_run_message.c_str(); }

const char* bl_last_run_out_dir(void) { return last_run_out_dir.c_str(); }

}  // extern "C"
