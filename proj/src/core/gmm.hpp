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

// Closed-form algebra on Gaussian mixtures.
//
// A Gmm stores K components in D dimensions. Covariances are held as
// lower-triangular Cholesky factors (covariance_i = L_i L_i^T), so every
// constructed value is positive definite by representation. Eigen matrices
// are column-major; the text record stores scales row-major (see to_text).

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/random.hpp"

namespace biglearn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Sorted, duplicate-free list of dimension indices.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<int> indices);

  static IndexSet range(int begin, int end);  // {begin, ..., end-1}

  const std::vector<int>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  int operator[](std::size_t i) const { return indices_[i]; }
  bool contains(int index) const;

  bool within(int dim) const;  // every index in [0, dim)
  bool disjoint(const IndexSet& other) const;
  IndexSet complement(int dim) const;

  std::string to_string() const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<int> indices_;
};

class Gmm {
 public:
  // Validates every invariant; throws Error(kInvalidArgument) otherwise.
  Gmm(VectorXd weights, std::vector<VectorXd> means, std::vector<MatrixXd> scales);

  // Factors each covariance; throws Error(kNumerical) if one is not positive definite.
  static Gmm from_covariances(VectorXd weights, std::vector<VectorXd> means,
                              const std::vector<MatrixXd>& covariances);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(weights_.size()); }
  const VectorXd& weights() const { return weights_; }
  const std::vector<VectorXd>& means() const { return means_; }
  const std::vector<MatrixXd>& scales() const { return scales_; }
  const VectorXd& mean(int i) const { return means_[i]; }
  const MatrixXd& scale(int i) const { return scales_[i]; }
  MatrixXd covariance(int i) const;

 private:
  int dim_ = 0;
  VectorXd weights_;
  std::vector<VectorXd> means_;
  std::vector<MatrixXd> scales_;
};

double log_density(const Gmm& g, const VectorXd& x);

// Row-wise log densities of an n x D matrix of points.
VectorXd log_density(const Gmm& g, const MatrixXd& points);

// Gradient of log density w.r.t. x.
VectorXd grad_log_density(const Gmm& g, const VectorXd& x);

struct GmmSample {
  MatrixXd points;              // n x D
  std::vector<int> components;  // n
  MatrixXd noises;              // n x D standard normal, points = mean + scale * noise
};

GmmSample sample(const Gmm& g, int n, Rng& rng);

Gmm marginalize(const Gmm& g, const IndexSet& s);

// Conditional of the t-coordinates given x_s on the s-coordinates.
Gmm condition(const Gmm& g, const IndexSet& s, const VectorXd& x_s, const IndexSet& t);

// Distribution of a*x for x ~ g; a must have full row rank.
Gmm linear_transform(const Gmm& g, const MatrixXd& a);

// Distribution of x + e, e ~ N(0, noise_var * I).
Gmm convolve_gaussian(const Gmm& g, double noise_var);

// Structured-text record (JSON object with dim, weights, means, scales);
// doubles printed with 17 significant digits so parsing round-trips exactly.
std::string to_text(const Gmm& g);
Gmm gmm_from_text(const std::string& text);

// Log-sum-exp of a vector; -inf for all -inf entries.
double log_sum_exp(const VectorXd& v);

// Cholesky factor of a symmetric positive-definite matrix; throws Error(kNumerical).
MatrixXd cholesky_lower(const MatrixXd& covariance, const char* context);

}  // namespace biglearn
