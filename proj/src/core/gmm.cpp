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

#include "core/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "core/error.hpp"
#include "core/text_io.hpp"

namespace biglearn {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log N(x | mean, L L^T) from the Cholesky factor.
double log_normal(const VectorXd& x, const VectorXd& mean, const MatrixXd& scale) {
  const VectorXd z = scale.triangularView<Eigen::Lower>().solve(x - mean);
  const double log_det = scale.diagonal().array().log().sum();
  return -0.5 * static_cast<double>(x.size()) * kLog2Pi - log_det - 0.5 * z.squaredNorm();
}

MatrixXd restrict(const MatrixXd& m, const IndexSet& rows, const IndexSet& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  return out;
}

VectorXd restrict(const VectorXd& v, const IndexSet& idx) {
  VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// IndexSet

IndexSet::IndexSet(std::vector<int> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  require(std::adjacent_find(indices_.begin(), indices_.end()) == indices_.end(),
          "index set contains duplicates");
  require(indices_.empty() || indices_.front() >= 0, "index set contains a negative index");
}

IndexSet IndexSet::range(int begin, int end) {
  std::vector<int> v;
  for (int i = begin; i < end; ++i) v.push_back(i);
  return IndexSet(std::move(v));
}

bool IndexSet::contains(int index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

bool IndexSet::within(int dim) const { return indices_.empty() || indices_.back() < dim; }

bool IndexSet::disjoint(const IndexSet& other) const {
  return std::none_of(indices_.begin(), indices_.end(),
                      [&](int i) { return other.contains(i); });
}

IndexSet IndexSet::complement(int dim) const {
  std::vector<int> v;
  for (int i = 0; i < dim; ++i)
    if (!contains(i)) v.push_back(i);
  return IndexSet(std::move(v));
}

std::string IndexSet::to_string() const {
  std::string out = "{";
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(indices_[i]);
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Gmm

Gmm::Gmm(VectorXd weights, std::vector<VectorXd> means, std::vector<MatrixXd> scales)
    : weights_(std::move(weights)), means_(std::move(means)), scales_(std::move(scales)) {
  const auto k = weights_.size();
  require(k > 0, "gmm: at least one component required");
  require(means_.size() == static_cast<std::size_t>(k) && scales_.size() == means_.size(),
          "gmm: weights, means and scales must have the same number of components");
  dim_ = static_cast<int>(means_.front().size());
  require(dim_ > 0, "gmm: dimension must be positive");
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    require(std::isfinite(weights_[i]) && weights_[i] >= 0.0, "gmm: weights must be nonnegative");
    total += weights_[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, fmt::format("gmm: weights sum to {} (expected 1)", total));
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& m = means_[i];
    const auto& l = scales_[i];
    require(m.size() == dim_ && m.allFinite(), "gmm: every mean must be a finite vector of length dim");
    require(l.rows() == dim_ && l.cols() == dim_ && l.allFinite(), "gmm: every scale must be a finite dim x dim matrix");
    for (int r = 0; r < dim_; ++r) {
      require(l(r, r) > 0.0, "gmm: scale diagonals must be strictly positive");
      for (int c = r + 1; c < dim_; ++c)
        require(l(r, c) == 0.0, "gmm: scales must be lower-triangular");
    }
  }
}

Gmm Gmm::from_covariances(VectorXd weights, std::vector<VectorXd> means,
                          const std::vector<MatrixXd>& covariances) {
  std::vector<MatrixXd> scales;
  scales.reserve(covariances.size());
  for (const auto& c : covariances) scales.push_back(cholesky_lower(c, "gmm covariance"));
  return Gmm(std::move(weights), std::move(means), std::move(scales));
}

MatrixXd Gmm::covariance(int i) const { return scales_[i] * scales_[i].transpose(); }

MatrixXd cholesky_lower(const MatrixXd& covariance, const char* context) {
  require(covariance.rows() == covariance.cols(), std::string(context) + ": covariance must be square");
  const MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::kNumerical, std::string(context) + ": covariance is not positive definite");
  MatrixXd l = llt.matrixL();
  for (Eigen::Index r = 0; r < l.rows(); ++r)
    if (!(l(r, r) > 0.0) || !std::isfinite(l(r, r)))
      fail(ErrorKind::kNumerical, std::string(context) + ": covariance is numerically singular");
  return l;
}

double log_sum_exp(const VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// ---------------------------------------------------------------------------
// densities

double log_density(const Gmm& g, const VectorXd& x) {
  require(x.size() == g.dim(), fmt::format("log_density: point has length {}, gmm dim is {}", x.size(), g.dim()));
  VectorXd terms(g.size());
  for (int i = 0; i < g.size(); ++i)
    terms[i] = std::log(g.weights()[i]) + log_normal(x, g.mean(i), g.scale(i));
  return log_sum_exp(terms);
}

VectorXd log_density(const Gmm& g, const MatrixXd& points) {
  require(points.cols() == g.dim(), "log_density: point matrix must have dim columns");
  VectorXd out(points.rows());
  for (Eigen::Index r = 0; r < points.rows(); ++r) out[r] = log_density(g, VectorXd(points.row(r).transpose()));
  return out;
}

VectorXd grad_log_density(const Gmm& g, const VectorXd& x) {
  require(x.size() == g.dim(), "grad_log_density: dimension mismatch");
  VectorXd terms(g.size());
  std::vector<VectorXd> grads;
  grads.reserve(g.size());
  for (int i = 0; i < g.size(); ++i) {
    terms[i] = std::log(g.weights()[i]) + log_normal(x, g.mean(i), g.scale(i));
    const auto lower = g.scale(i).triangularView<Eigen::Lower>();
    const VectorXd z = lower.solve(x - g.mean(i));
    grads.push_back(-lower.transpose().solve(z));
  }
  const double lse = log_sum_exp(terms);
  VectorXd out = VectorXd::Zero(g.dim());
  for (int i = 0; i < g.size(); ++i) out += std::exp(terms[i] - lse) * grads[i];
  return out;
}

// ---------------------------------------------------------------------------
// sampling

GmmSample sample(const Gmm& g, int n, Rng& rng) {
  require(n >= 1, "sample: n must be at least 1");
  GmmSample out{MatrixXd(n, g.dim()), std::vector<int>(n), MatrixXd(n, g.dim())};
  const std::vector<double> w(g.weights().data(), g.weights().data() + g.size());
  for (int j = 0; j < n; ++j) {
    const int c = static_cast<int>(rng.categorical(w));
    out.components[j] = c;
    for (int d = 0; d < g.dim(); ++d) out.noises(j, d) = rng.normal();
    out.points.row(j) = (g.mean(c) + g.scale(c) * out.noises.row(j).transpose()).transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// algebra

Gmm marginalize(const Gmm& g, const IndexSet& s) {
  require(!s.empty(), "marginalize: index set must be nonempty");
  require(s.within(g.dim()), "marginalize: index out of range");
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covs;
  for (int i = 0; i < g.size(); ++i) {
    means.push_back(restrict(g.mean(i), s));
    covs.push_back(restrict(g.covariance(i), s, s));
  }
  return Gmm::from_covariances(g.weights(), std::move(means), covs);
}

Gmm condition(const Gmm& g, const IndexSet& s, const VectorXd& x_s, const IndexSet& t) {
  require(!s.empty() && !t.empty(), "condition: s and t must be nonempty");
  require(s.within(g.dim()) && t.within(g.dim()), "condition: index out of range");
  require(s.disjoint(t), "condition: s and t must be disjoint");
  require(x_s.size() == static_cast<Eigen::Index>(s.size()), "condition: x_s length must equal |s|");

  std::vector<VectorXd> means;
  std::vector<MatrixXd> covs;
  VectorXd log_w(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const MatrixXd cov = g.covariance(i);
    const MatrixXd ss = restrict(cov, s, s);
    const MatrixXd ts = restrict(cov, t, s);
    const MatrixXd tt = restrict(cov, t, t);
    const VectorXd mu_s = restrict(g.mean(i), s);
    const MatrixXd l_ss = cholesky_lower(ss, "condition: conditioning block");
    const auto lower = l_ss.triangularView<Eigen::Lower>();
    // gain = ts * ss^{-1}, via two triangular solves on the transpose
    const MatrixXd gain = lower.transpose().solve(lower.solve(ts.transpose())).transpose();
    means.push_back(restrict(g.mean(i), t) + gain * (x_s - mu_s));
    covs.push_back(tt - gain * ts.transpose());
    log_w[i] = std::log(g.weights()[i]) + log_normal(x_s, mu_s, l_ss);
  }
  // normalize in the log domain so far-tail conditioning values stay finite
  const double lse = log_sum_exp(log_w);
  if (!std::isfinite(lse)) fail(ErrorKind::kNumerical, "condition: all responsibilities vanish");
  VectorXd w = (log_w.array() - lse).exp();
  w /= w.sum();
  std::vector<MatrixXd> scales;
  for (auto& c : covs) scales.push_back(cholesky_lower(c, "condition: conditional covariance"));
  return Gmm(std::move(w), std::move(means), std::move(scales));
}

Gmm linear_transform(const Gmm& g, const MatrixXd& a) {
  require(a.cols() == g.dim(), fmt::format("linear_transform: matrix has {} columns, gmm dim is {}", a.cols(), g.dim()));
  require(a.rows() >= 1 && a.allFinite(), "linear_transform: matrix must be finite and nonempty");
  Eigen::FullPivLU<MatrixXd> lu(a);
  require(lu.rank() == a.rows(), "linear_transform: matrix must have full row rank");
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covs;
  for (int i = 0; i < g.size(); ++i) {
    means.push_back(a * g.mean(i));
    const MatrixXd al = a * g.scale(i);
    covs.push_back(al * al.transpose());
  }
  return Gmm::from_covariances(g.weights(), std::move(means), covs);
}

Gmm convolve_gaussian(const Gmm& g, double noise_var) {
  require(std::isfinite(noise_var) && noise_var >= 0.0, "convolve_gaussian: noise variance must be nonnegative");
  std::vector<MatrixXd> covs;
  for (int i = 0; i < g.size(); ++i) {
    MatrixXd c = g.covariance(i);
    c.diagonal().array() += noise_var;
    covs.push_back(std::move(c));
  }
  return Gmm::from_covariances(g.weights(), g.means(), covs);
}

// ---------------------------------------------------------------------------
// text record

std::string to_text(const Gmm& g) {
  std::string out = fmt::format("{{\"dim\":{},\"weights\":{},\"means\":[", g.dim(), json_array(g.weights()));
  for (int i = 0; i < g.size(); ++i) out += (i ? "," : "") + json_array(g.mean(i));
  out += "],\"scales\":[";
  for (int i = 0; i < g.size(); ++i) {
    VectorXd tri(g.dim() * (g.dim() + 1) / 2);
    int k = 0;
    for (int r = 0; r < g.dim(); ++r)
      for (int c = 0; c <= r; ++c) tri[k++] = g.scale(i)(r, c);
    out += (i ? "," : "") + json_array(tri);
  }
  return out + "]}";
}

Gmm gmm_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("gmm record: ") + e.what());
  }
  try {
    const int dim = j.at("dim").get<int>();
    require(dim > 0, "gmm record: dim must be positive");
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto m = j.at("means").get<std::vector<std::vector<double>>>();
    const auto s = j.at("scales").get<std::vector<std::vector<double>>>();
    require(m.size() == w.size() && s.size() == w.size(), "gmm record: component counts disagree");
    std::vector<VectorXd> means;
    std::vector<MatrixXd> scales;
    for (std::size_t i = 0; i < w.size(); ++i) {
      require(m[i].size() == static_cast<std::size_t>(dim), "gmm record: mean length must equal dim");
      require(s[i].size() == static_cast<std::size_t>(dim * (dim + 1) / 2),
              "gmm record: scale must list dim*(dim+1)/2 lower-triangle entries");
      means.push_back(Eigen::Map<const VectorXd>(m[i].data(), dim));
      MatrixXd l = MatrixXd::Zero(dim, dim);
      int k = 0;
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c <= r; ++c) l(r, c) = s[i][k++];
      scales.push_back(std::move(l));
    }
    return Gmm(Eigen::Map<const VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
               std::move(means), std::move(scales));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("gmm record: ") + e.what());
  }
}

}  // namespace biglearn
