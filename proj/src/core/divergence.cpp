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

#include "core/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "core/error.hpp"

namespace biglearn {
namespace {

using Eigen::ArrayXd;
using Eigen::ArrayXXd;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
const double kLogTiny = std::log(1e-300);

// Log density of a 1-D or 2-D mixture on the cells of a grid, one row at a
// time. A row is the whole axis in 1-D, and a fixed first coordinate in 2-D.
class GridLogDensity {
 public:
  GridLogDensity(const Gmm& g, const GridSpec& grid) : grid_(grid) {
    const int d = grid.dim();
    const int n = grid.counts[d - 1];
    axis_last_.resize(n);
    for (int k = 0; k < n; ++k) axis_last_[k] = grid.center(d - 1, k);
    for (int i = 0; i < g.size(); ++i) {
      const MatrixXd& l = g.scale(i);
      const MatrixXd linv = l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
      const MatrixXd prec = linv.transpose() * linv;
      Component c;
      c.log_const = std::log(g.weights()[i]) - 0.5 * d * kLog2Pi - l.diagonal().array().log().sum();
      c.m_first = g.mean(i)[0];
      c.p_first = prec(0, 0);
      c.p_cross = d == 2 ? prec(0, 1) : 0.0;
      c.delta = axis_last_ - g.mean(i)[d - 1];
      c.quad = -0.5 * prec(d - 1, d - 1) * c.delta.square();
      comps_.push_back(std::move(c));
    }
    terms_.resize(n, static_cast<Eigen::Index>(comps_.size()));
  }

  int rows() const { return grid_.dim() == 2 ? grid_.counts[0] : 1; }

  void row(int j, ArrayXd& out) {
    const bool two_d = grid_.dim() == 2;
    const double x0 = two_d ? grid_.center(0, j) : 0.0;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      const Component& c = comps_[i];
      if (two_d) {
        const double dx = x0 - c.m_first;
        const double base = c.log_const - 0.5 * c.p_first * dx * dx;
        const double slope = -c.p_cross * dx;
        terms_.col(i) = base + slope * c.delta + c.quad;
      } else {
        terms_.col(i) = c.log_const + c.quad;
      }
    }
    if (comps_.size() == 1) {
      out = terms_.col(0);
      return;
    }
    if (comps_.size() == 2) {
      top_ = terms_.col(0).max(terms_.col(1));
      out = top_ + (1.0 + (-(terms_.col(0) - terms_.col(1)).abs()).exp()).log();
      return;
    }
    top_ = terms_.col(0);
    for (Eigen::Index i = 1; i < terms_.cols(); ++i) top_ = top_.max(terms_.col(i));
    acc_ = (terms_.col(0) - top_).exp();
    for (Eigen::Index i = 1; i < terms_.cols(); ++i) acc_ += (terms_.col(i) - top_).exp();
    out = top_ + acc_.log();
  }

 private:
  struct Component {
    double log_const = 0.0;
    double m_first = 0.0;
    double p_first = 0.0;
    double p_cross = 0.0;
    ArrayXd delta;  // last-axis centers minus mean
    ArrayXd quad;   // -1/2 P_ll delta^2
  };

  const GridSpec& grid_;
  ArrayXd axis_last_;
  std::vector<Component> comps_;
  ArrayXXd terms_;
  ArrayXd top_;
  ArrayXd acc_;
};

// Sum of terms over cells whose log density clears the underflow floor.
// Boolean Eigen selects are not vectorized, so the mask runs as a plain loop.
double masked_sum(const ArrayXd& log_mass, const ArrayXd& terms) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < terms.size(); ++k) total += log_mass[k] > kLogTiny ? terms[k] : 0.0;
  return total;
}

void check_grid_inputs(const Gmm& p, const Gmm& q, const GridSpec& grid, const char* op) {
  require(p.dim() == q.dim(), fmt::format("{}: distributions have dims {} and {}", op, p.dim(), q.dim()));
  require(grid.dim() == p.dim(), fmt::format("{}: grid dim {} does not match distribution dim {}", op, grid.dim(), p.dim()));
  if (grid.dim() > 2)
    fail(ErrorKind::kUnsupported, fmt::format("{}: grid quadrature supports dim <= 2 (got {}); use the Monte-Carlo estimator", op, grid.dim()));
  validate(grid);
}

}  // namespace

// ---------------------------------------------------------------------------
// grids

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= (upper[a] - lower[a]) / counts[a];
  return v;
}

void validate(const GridSpec& grid, std::int64_t max_cells) {
  require(grid.dim() >= 1, "grid: at least one axis required");
  require(grid.lower.size() == grid.counts.size() && grid.upper.size() == grid.counts.size(),
          "grid: bounds and counts must have one entry per axis");
  std::int64_t cells = 1;
  for (int a = 0; a < grid.dim(); ++a) {
    require(std::isfinite(grid.lower[a]) && std::isfinite(grid.upper[a]) && grid.lower[a] < grid.upper[a],
            fmt::format("grid: axis {} needs finite lower < upper", a));
    require(grid.counts[a] >= 3, fmt::format("grid: axis {} needs at least 3 points", a));
    cells *= grid.counts[a];
    require(cells <= max_cells, fmt::format("grid: more than {} cells", max_cells));
  }
}

GridSpec default_grid(const Gmm& p, const Gmm& q, int points, double sigmas) {
  require(p.dim() == q.dim(), "default_grid: dimension mismatch");
  GridSpec grid;
  for (int a = 0; a < p.dim(); ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Gmm* g : {&p, &q}) {
      for (int i = 0; i < g->size(); ++i) {
        const double sd = g->scale(i).row(a).norm();
        lo = std::min(lo, g->mean(i)[a] - sigmas * sd);
        hi = std::max(hi, g->mean(i)[a] + sigmas * sd);
      }
    }
    grid.lower.push_back(lo);
    grid.upper.push_back(hi);
    grid.counts.push_back(points);
  }
  return grid;
}

double kl_grid(const Gmm& p, const Gmm& q, const GridSpec& grid) {
  check_grid_inputs(p, q, grid, "kl_grid");
  GridLogDensity lp_eval(p, grid);
  GridLogDensity lq_eval(q, grid);
  ArrayXd lp, lq, terms;
  double total = 0.0;
  for (int j = 0; j < lp_eval.rows(); ++j) {
    lp_eval.row(j, lp);
    lq_eval.row(j, lq);
    terms = lp.exp() * (lp - lq);
    total += masked_sum(lp, terms);
  }
  return total * grid.cell_volume();
}

double js_grid(const Gmm& p, const Gmm& q, const GridSpec& grid) {
  check_grid_inputs(p, q, grid, "js_grid");
  GridLogDensity lp_eval(p, grid);
  GridLogDensity lq_eval(q, grid);
  ArrayXd lp, lq, lm, terms;
  double total = 0.0;
  for (int j = 0; j < lp_eval.rows(); ++j) {
    lp_eval.row(j, lp);
    lq_eval.row(j, lq);
    lm = lp.max(lq) + (1.0 + (-(lp - lq).abs()).exp()).log() - std::numbers::ln2;
    terms = lp.exp() * (lp - lm);
    total += 0.5 * masked_sum(lp, terms);
    terms = lq.exp() * (lq - lm);
    total += 0.5 * masked_sum(lq, terms);
  }
  return total * grid.cell_volume();
}

McEstimate kl_mc(const Gmm& p, const Gmm& q, int n, Rng& rng) {
  require(p.dim() == q.dim(), "kl_mc: dimension mismatch");
  require(n >= 2, "kl_mc: need at least 2 samples");
  const GmmSample s = sample(p, n, rng);
  const VectorXd diff = log_density(p, s.points) - log_density(q, s.points);
  const double mean = diff.mean();
  const double var = (diff.array() - mean).square().sum() / (n - 1);
  return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// ThetaModel

double PositivityMap::operator()(double u) const {
  const double sp = u > 30.0 ? u : std::log1p(std::exp(u));
  return floor + sp;
}

double PositivityMap::derivative(double u) const { return 1.0 / (1.0 + std::exp(-u)); }

double PositivityMap::inverse(double value) const {
  require(value > floor, fmt::format("positivity map: value {} is not above the floor {}", value, floor));
  const double sp = value - floor;
  return sp > 30.0 ? sp : std::log(std::expm1(sp));
}

ThetaModel::ThetaModel(int components, int dim, VectorXd params, PositivityMap map)
    : components_(components), dim_(dim), params_(std::move(params)), map_(map) {
  require(components >= 1 && dim >= 1, "theta model: components and dim must be positive");
  require(params_.size() == num_params(components, dim),
          fmt::format("theta model: expected {} parameters, got {}", num_params(components, dim), params_.size()));
  require(map_.floor > 0.0, "theta model: positivity floor must be positive");
}

ThetaModel ThetaModel::from_gmm(const Gmm& g, PositivityMap map) {
  const int k = g.size();
  const int d = g.dim();
  for (int i = 0; i < k; ++i)
    require(std::abs(g.weights()[i] - 1.0 / k) <= 1e-12, "theta model: template weights must be equal");
  VectorXd p(num_params(k, d));
  for (int i = 0; i < k; ++i) p.segment(i * d, d) = g.mean(i);
  int off = k * d;
  for (int i = 0; i < k; ++i)
    for (int r = 0; r < d; ++r)
      for (int c = 0; c <= r; ++c) p[off++] = r == c ? map.inverse(g.scale(i)(r, c)) : g.scale(i)(r, c);
  return ThetaModel(k, d, std::move(p), map);
}

void ThetaModel::set_params(VectorXd params) {
  require(params.size() == params_.size(), "theta model: parameter length mismatch");
  params_ = std::move(params);
}

VectorXd ThetaModel::mean(int i) const { return params_.segment(mean_offset(i), dim_); }

MatrixXd ThetaModel::scale(int i) const {
  MatrixXd l = MatrixXd::Zero(dim_, dim_);
  int off = scale_offset(i);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c <= r; ++c, ++off) l(r, c) = r == c ? map_(params_[off]) : params_[off];
  return l;
}

Gmm ThetaModel::materialize() const {
  std::vector<VectorXd> means;
  std::vector<MatrixXd> scales;
  for (int i = 0; i < components_; ++i) {
    means.push_back(mean(i));
    scales.push_back(scale(i));
  }
  return Gmm(VectorXd::Constant(components_, 1.0 / components_), std::move(means), std::move(scales));
}

// ---------------------------------------------------------------------------
// channel

LinearGaussianChannel LinearGaussianChannel::identity(int dim) {
  return {MatrixXd::Identity(dim, dim), MatrixXd::Zero(dim, dim)};
}

Gmm apply(const Gmm& g, const LinearGaussianChannel& channel) {
  require(channel.in_dim() == g.dim(), "channel: input dim does not match distribution");
  require(channel.noise_cov.rows() == channel.out_dim() && channel.noise_cov.cols() == channel.out_dim(),
          "channel: noise covariance shape mismatch");
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covs;
  for (int i = 0; i < g.size(); ++i) {
    means.push_back(channel.map * g.mean(i));
    const MatrixXd ml = channel.map * g.scale(i);
    covs.push_back(ml * ml.transpose() + channel.noise_cov);
  }
  return Gmm::from_covariances(g.weights(), std::move(means), covs);
}

namespace {

bool noiseless(const LinearGaussianChannel& channel) { return channel.noise_cov.isZero(0.0); }

}  // namespace

PathwiseDraws draw_pathwise(const ThetaModel& model, const LinearGaussianChannel& channel, int n, Rng& rng) {
  require(n >= 1, "draw_pathwise: n must be at least 1");
  require(channel.in_dim() == model.dim(), "draw_pathwise: channel input dim mismatch");
  const std::vector<double> w(model.components(), 1.0 / model.components());
  PathwiseDraws d;
  d.components.resize(n);
  d.eps.resize(n, model.dim());
  const bool noisy = !noiseless(channel);
  if (noisy) d.eta.resize(n, channel.out_dim());
  for (int j = 0; j < n; ++j) {
    d.components[j] = static_cast<int>(rng.categorical(w));
    for (int a = 0; a < model.dim(); ++a) d.eps(j, a) = rng.normal();
    if (noisy)
      for (int a = 0; a < channel.out_dim(); ++a) d.eta(j, a) = rng.normal();
  }
  return d;
}

MatrixXd pathwise_points(const ThetaModel& model, const LinearGaussianChannel& channel, const PathwiseDraws& draws) {
  const int n = draws.size();
  MatrixXd y(n, channel.out_dim());
  const bool noisy = !noiseless(channel);
  MatrixXd noise_factor;
  if (noisy) noise_factor = cholesky_lower(channel.noise_cov, "channel noise");
  std::vector<MatrixXd> scales;
  for (int i = 0; i < model.components(); ++i) scales.push_back(model.scale(i));
  for (int j = 0; j < n; ++j) {
    const int c = draws.components[j];
    VectorXd x = model.mean(c) + scales[c] * draws.eps.row(j).transpose();
    VectorXd yj = channel.map * x;
    if (noisy) yj += noise_factor * draws.eta.row(j).transpose();
    y.row(j) = yj.transpose();
  }
  return y;
}

namespace {

// Per-component quantities of a mixture pushed through the channel.
struct ChannelComponent {
  double log_const;  // log w - d/2 log 2pi - 1/2 log det S
  VectorXd mean;     // map * mu
  MatrixXd precision;
};

std::vector<ChannelComponent> channel_components(const Gmm& pushed) {
  std::vector<ChannelComponent> out;
  const int d = pushed.dim();
  for (int i = 0; i < pushed.size(); ++i) {
    const MatrixXd& l = pushed.scale(i);
    const MatrixXd linv = l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
    out.push_back({std::log(pushed.weights()[i]) - 0.5 * d * kLog2Pi - l.diagonal().array().log().sum(),
                   pushed.mean(i), linv.transpose() * linv});
  }
  return out;
}

}  // namespace

PathwiseEstimate reverse_kl_pathwise(const ThetaModel& model, const Gmm& target,
                                     const LinearGaussianChannel& channel, const PathwiseDraws& draws) {
  require(target.dim() == model.dim(), "reverse_kl_pathwise: model and target dims differ");
  require(draws.size() >= 2, "reverse_kl_pathwise: need at least 2 draws");
  require(draws.eps.cols() == model.dim(), "reverse_kl_pathwise: draws do not match the model");
  const int k = model.components();
  const int dim = model.dim();
  const int out_dim = channel.out_dim();
  const int n = draws.size();
  const int np = model.num_params();

  const Gmm p_pushed = apply(model.materialize(), channel);
  const Gmm q_pushed = apply(target, channel);
  const auto pc = channel_components(p_pushed);
  const auto qc = channel_components(q_pushed);
  const MatrixXd y = pathwise_points(model, channel, draws);

  std::vector<MatrixXd> scales(k);
  std::vector<MatrixXd> pulled_precision(k);  // map^T S_i^{-1} map
  for (int i = 0; i < k; ++i) {
    scales[i] = model.scale(i);
    pulled_precision[i] = channel.map.transpose() * pc[i].precision * channel.map;
  }
  const int kq = target.size();

  VectorXd sum_g = VectorXd::Zero(np);
  VectorXd sum_g2 = VectorXd::Zero(np);
  double sum_f = 0.0;
  double sum_f2 = 0.0;

  VectorXd gs(np);
  VectorXd log_terms_p(k), log_terms_q(kq);
  std::vector<VectorXd> a(k, VectorXd(out_dim));
  std::vector<VectorXd> b(kq, VectorXd(out_dim));
  VectorXd yj(out_dim), grad_y(out_dim), u(dim), v(dim);
  MatrixXd direct(dim, dim);

  for (int j = 0; j < n; ++j) {
    yj = y.row(j).transpose();
    for (int i = 0; i < k; ++i) {
      a[i].noalias() = pc[i].precision * (yj - pc[i].mean);
      log_terms_p[i] = pc[i].log_const - 0.5 * (yj - pc[i].mean).dot(a[i]);
    }
    grad_y.setZero();
    for (int i = 0; i < kq; ++i) {
      b[i].noalias() = qc[i].precision * (yj - qc[i].mean);
      log_terms_q[i] = qc[i].log_const - 0.5 * (yj - qc[i].mean).dot(b[i]);
    }
    const double lp = log_sum_exp(log_terms_p);
    const double lq = log_sum_exp(log_terms_q);
    // grad_y (log p - log q) = -sum r_i a_i + sum rho_k b_k
    for (int i = 0; i < kq; ++i) {
      grad_y += std::exp(log_terms_q[i] - lq) * b[i];
    }
    gs.setZero();
    for (int i = 0; i < k; ++i) {
      const double r = std::exp(log_terms_p[i] - lp);
      grad_y -= r * a[i];
      if (r == 0.0) continue;
      // explicit theta-dependence of log p at fixed y
      u.noalias() = channel.map.transpose() * a[i];
      gs.segment(model.mean_offset(i), dim) += r * u;
      direct.noalias() = r * (u * u.transpose() - pulled_precision[i]) * scales[i];
      int off = model.scale_offset(i);
      for (int rr = 0; rr < dim; ++rr)
        for (int cc = 0; cc <= rr; ++cc) gs[off++] += direct(rr, cc);
    }
    // dependence through the sample point y(theta)
    const int c = draws.components[j];
    v.noalias() = channel.map.transpose() * grad_y;
    gs.segment(model.mean_offset(c), dim) += v;
    {
      int off = model.scale_offset(c);
      for (int rr = 0; rr < dim; ++rr)
        for (int cc = 0; cc <= rr; ++cc) gs[off++] += v[rr] * draws.eps(j, cc);
    }
    const double f = lp - lq;
    sum_f += f;
    sum_f2 += f * f;
    sum_g += gs;
    sum_g2 += gs.cwiseAbs2();
  }

  // chain rule through the positivity map on scale diagonals
  VectorXd chain = VectorXd::Ones(np);
  for (int i = 0; i < k; ++i) {
    int off = model.scale_offset(i);
    for (int rr = 0; rr < dim; ++rr)
      for (int cc = 0; cc <= rr; ++cc, ++off)
        if (rr == cc) chain[off] = model.map().derivative(model.params()[off]);
  }

  PathwiseEstimate est;
  est.loss = sum_f / n;
  est.loss_std_error = std::sqrt(std::max(0.0, (sum_f2 - n * est.loss * est.loss) / (n - 1)) / n);
  const VectorXd mean_g = sum_g / n;
  const VectorXd var_g = ((sum_g2 - n * mean_g.cwiseAbs2()) / (n - 1)).cwiseMax(0.0);
  est.grad = mean_g.cwiseProduct(chain);
  est.grad_std_error = (var_g / n).cwiseSqrt().cwiseProduct(chain.cwiseAbs());
  return est;
}

PathwiseEstimate reverse_kl_pathwise_grad(const ThetaModel& model, const Gmm& target,
                                          const LinearGaussianChannel& channel, int n, Rng& rng) {
  const PathwiseDraws draws = draw_pathwise(model, channel, n, rng);
  return reverse_kl_pathwise(model, target, channel, draws);
}

}  // namespace biglearn
