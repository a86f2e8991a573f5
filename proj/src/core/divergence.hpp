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

#pragma once

// KL / JS estimators between Gaussian mixtures and the pathwise gradient of
// the reverse-KL matching loss.

#include <cstdint>
#include <vector>

#include "core/gmm.hpp"
#include "core/random.hpp"

namespace biglearn {

// Midpoint-rule quadrature domain; counts are cells per axis.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> counts;

  int dim() const { return static_cast<int>(counts.size()); }
  double cell_volume() const;
  double center(int axis, int i) const { return lower[axis] + (i + 0.5) * (upper[axis] - lower[axis]) / counts[axis]; }
};

inline constexpr std::int64_t kDefaultMaxCells = 10'000'000;
inline constexpr double kDefaultBoundSigmas = 8.0;

void validate(const GridSpec& grid, std::int64_t max_cells = kDefaultMaxCells);

// Union over both mixtures of each component mean +- `sigmas` marginal standard
// deviations, per axis, with `points` cells per axis.
GridSpec default_grid(const Gmm& p, const Gmm& q, int points, double sigmas = kDefaultBoundSigmas);

// sum over cells of p (log p - log q) dV; cells with p < 1e-300 are skipped.
double kl_grid(const Gmm& p, const Gmm& q, const GridSpec& grid);
double js_grid(const Gmm& p, const Gmm& q, const GridSpec& grid);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

McEstimate kl_mc(const Gmm& p, const Gmm& q, int n, Rng& rng);

// ---------------------------------------------------------------------------
// Trainable model

// Smooth map from an unconstrained real to a positive scale diagonal:
// floor + softplus(u).
struct PositivityMap {
  double floor = 1e-4;

  double operator()(double u) const;
  double derivative(double u) const;
  double inverse(double value) const;
};

// K equal-weight components; parameters are all means (K*D) followed by the
// lower triangles of all scales (K*D*(D+1)/2, row-major per component).
// Diagonal scale entries are stored pre-map.
class ThetaModel {
 public:
  ThetaModel(int components, int dim, VectorXd params, PositivityMap map = {});

  // Inverse of materialize(); the template's weights must be equal.
  static ThetaModel from_gmm(const Gmm& g, PositivityMap map = {});

  int components() const { return components_; }
  int dim() const { return dim_; }
  int num_params() const { return static_cast<int>(params_.size()); }
  static int num_params(int components, int dim) { return components * dim + components * dim * (dim + 1) / 2; }

  int mean_offset(int i) const { return i * dim_; }
  int scale_offset(int i) const { return components_ * dim_ + i * dim_ * (dim_ + 1) / 2; }

  const VectorXd& params() const { return params_; }
  void set_params(VectorXd params);
  const PositivityMap& map() const { return map_; }

  VectorXd mean(int i) const;
  MatrixXd scale(int i) const;
  Gmm materialize() const;

 private:
  int components_;
  int dim_;
  VectorXd params_;
  PositivityMap map_;
};

// ---------------------------------------------------------------------------
// Differentiable task pipeline

// y = map * x + e with e ~ N(0, noise_cov). Any chain of linear transforms,
// Gaussian noising and marginalization reduces to one channel.
struct LinearGaussianChannel {
  MatrixXd map;
  MatrixXd noise_cov;

  static LinearGaussianChannel identity(int dim);
  int in_dim() const { return static_cast<int>(map.cols()); }
  int out_dim() const { return static_cast<int>(map.rows()); }
};

Gmm apply(const Gmm& g, const LinearGaussianChannel& channel);

// Random inputs of the reparameterized sampler, held fixed for common-random-
// number comparisons.
struct PathwiseDraws {
  std::vector<int> components;
  MatrixXd eps;  // n x in_dim
  MatrixXd eta;  // n x out_dim, empty when the channel is noiseless
  int size() const { return static_cast<int>(components.size()); }
};

PathwiseDraws draw_pathwise(const ThetaModel& model, const LinearGaussianChannel& channel, int n, Rng& rng);

// Output points y_j = map (mu_c + L_c eps_j) + chol(noise_cov) eta_j.
MatrixXd pathwise_points(const ThetaModel& model, const LinearGaussianChannel& channel, const PathwiseDraws& draws);

struct PathwiseEstimate {
  double loss = 0.0;
  double loss_std_error = 0.0;
  VectorXd grad;
  VectorXd grad_std_error;
};

// Monte-Carlo reverse KL[p_theta || target] through `channel` and its total
// derivative in theta with the draws held fixed.
PathwiseEstimate reverse_kl_pathwise(const ThetaModel& model, const Gmm& target,
                                     const LinearGaussianChannel& channel, const PathwiseDraws& draws);

PathwiseEstimate reverse_kl_pathwise_grad(const ThetaModel& model, const Gmm& target,
                                          const LinearGaussianChannel& channel, int n, Rng& rng);

}  // namespace biglearn
