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

#include "core/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "core/error.hpp"
#include "core/text_io.hpp"

namespace biglearn {

// ---------------------------------------------------------------------------
// transforms

Transform Transform::rotation(double radians) {
  Transform t;
  t.kind = Kind::kRotation;
  t.angle = radians;
  return t;
}

Transform Transform::rotation_degrees(double degrees) { return rotation(degrees * std::numbers::pi / 180.0); }

Transform Transform::orthogonal(std::uint64_t seed) {
  Transform t;
  t.kind = Kind::kOrthogonal;
  t.seed = seed;
  return t;
}

Transform Transform::random_orthogonal() {
  Transform t;
  t.kind = Kind::kRandomOrthogonal;
  return t;
}

Transform Transform::noising(double noise_var) {
  Transform t;
  t.kind = Kind::kNoising;
  t.noise_var = noise_var;
  return t;
}

Transform Transform::composite(std::vector<Transform> parts) {
  Transform t;
  t.kind = Kind::kComposite;
  t.parts = std::move(parts);
  return t;
}

bool Transform::is_concrete() const {
  if (kind == Kind::kRandomOrthogonal) return false;
  return std::all_of(parts.begin(), parts.end(), [](const Transform& p) { return p.is_concrete(); });
}

std::string Transform::describe() const {
  switch (kind) {
    case Kind::kIdentity: return "identity";
    case Kind::kRotation: return fmt::format("rotation({}deg)", format_double(angle * 180.0 / std::numbers::pi));
    case Kind::kOrthogonal: return fmt::format("orthogonal(seed={})", seed);
    case Kind::kRandomOrthogonal: return "random_orthogonal";
    case Kind::kNoising: return fmt::format("noising({})", format_double(noise_var));
    case Kind::kComposite: {
      std::string out = "composite[";
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ";" : "") + parts[i].describe();
      return out + "]";
    }
  }
  return "?";
}

MatrixXd rotation_matrix(double radians) {
  MatrixXd a(2, 2);
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  a << c, -s, s, c;
  return a;
}

MatrixXd orthogonal_matrix(int dim, std::uint64_t seed) {
  require(dim >= 1, "orthogonal_matrix: dim must be positive");
  Rng rng(seed);
  if (dim == 2) return rotation_matrix(2.0 * std::numbers::pi * rng.uniform());
  MatrixXd g(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i)
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  return q;
}

namespace {

void check_transform(const Transform& t, int dim) {
  switch (t.kind) {
    case Transform::Kind::kRotation:
      require(dim == 2, "rotation transforms are only defined in 2 dimensions");
      require(std::isfinite(t.angle), "rotation angle must be finite");
      break;
    case Transform::Kind::kNoising:
      require(std::isfinite(t.noise_var) && t.noise_var >= 0.0, "noising variance must be nonnegative");
      break;
    case Transform::Kind::kComposite:
      for (const auto& p : t.parts) check_transform(p, dim);
      break;
    default: break;
  }
}

// Folds one transform stage into a channel y = map x + N(0, noise).
void append(LinearGaussianChannel& ch, const Transform& t) {
  const int d = ch.out_dim();
  switch (t.kind) {
    case Transform::Kind::kIdentity: break;
    case Transform::Kind::kRotation:
    case Transform::Kind::kOrthogonal: {
      const MatrixXd a = t.kind == Transform::Kind::kRotation ? rotation_matrix(t.angle) : orthogonal_matrix(d, t.seed);
      require(a.cols() == d, "transform: rotation applied to a non-2-D view");
      ch.map = a * ch.map;
      ch.noise_cov = a * ch.noise_cov * a.transpose();
      break;
    }
    case Transform::Kind::kNoising:
      ch.noise_cov.diagonal().array() += t.noise_var;
      break;
    case Transform::Kind::kComposite:
      for (const auto& p : t.parts) append(ch, p);
      break;
    case Transform::Kind::kRandomOrthogonal:
      fail(ErrorKind::kInvalidArgument, "transform: random_orthogonal must be materialized by sample_task first");
  }
}

Transform materialize(const Transform& t, Rng& rng) {
  if (t.kind == Transform::Kind::kRandomOrthogonal) return Transform::orthogonal(rng.next_u64());
  Transform out = t;
  for (auto& p : out.parts) p = materialize(p, rng);
  return out;
}

}  // namespace

Gmm apply_transform(const Gmm& g, const Transform& transform) {
  check_transform(transform, g.dim());
  switch (transform.kind) {
    case Transform::Kind::kIdentity: return g;
    case Transform::Kind::kRotation: return linear_transform(g, rotation_matrix(transform.angle));
    case Transform::Kind::kOrthogonal: return linear_transform(g, orthogonal_matrix(g.dim(), transform.seed));
    case Transform::Kind::kNoising: return convolve_gaussian(g, transform.noise_var);
    case Transform::Kind::kComposite: {
      Gmm out = g;
      for (const auto& p : transform.parts) out = apply_transform(out, p);
      return out;
    }
    case Transform::Kind::kRandomOrthogonal: break;
  }
  fail(ErrorKind::kInvalidArgument, "apply_transform: random_orthogonal must be materialized first");
}

// ---------------------------------------------------------------------------
// small value types

std::string to_string(Divergence d) {
  switch (d) {
    case Divergence::kReverseKl: return "reverse_kl";
    case Divergence::kForwardKl: return "forward_kl";
    case Divergence::kJs: return "js";
  }
  return "?";
}

std::optional<Divergence> parse_divergence(const std::string& name) {
  if (name == "reverse_kl") return Divergence::kReverseKl;
  if (name == "forward_kl") return Divergence::kForwardKl;
  if (name == "js") return Divergence::kJs;
  return std::nullopt;
}

ConditioningPolicy ConditioningPolicy::target_marginal(int n) {
  ConditioningPolicy p;
  p.kind = Kind::kTargetMarginal;
  p.count = n;
  return p;
}

ConditioningPolicy ConditioningPolicy::uniform_grid(double lower, double upper, int n) {
  ConditioningPolicy p;
  p.kind = Kind::kUniformGrid;
  p.lower = lower;
  p.upper = upper;
  p.count = n;
  return p;
}

ConditioningPolicy ConditioningPolicy::fixed(std::vector<double> values) {
  ConditioningPolicy p;
  p.kind = Kind::kFixed;
  p.values = std::move(values);
  p.count = 1;
  return p;
}

std::string ConditioningPolicy::describe() const {
  switch (kind) {
    case Kind::kTargetMarginal: return fmt::format("target_marginal {}", count);
    case Kind::kUniformGrid: return fmt::format("uniform_grid {} {} {}", format_double(lower), format_double(upper), count);
    case Kind::kFixed: return "fixed " + format_list(values, " ");
  }
  return "?";
}

void MatchingTask::validate(int dim) const {
  require(!t.empty(), "task: t must be nonempty");
  require(s.within(dim) && t.within(dim), fmt::format("task: indices must lie in [0, {})", dim));
  require(s.disjoint(t), "task: s and t must be disjoint");
  require(transform.is_concrete(), "task: transform has unmaterialized random parts");
  check_transform(transform, dim);
  if (!s.empty()) {
    switch (conditioning.kind) {
      case ConditioningPolicy::Kind::kTargetMarginal:
        require(conditioning.count >= 1, "task: conditioning needs at least one draw");
        break;
      case ConditioningPolicy::Kind::kUniformGrid:
        require(conditioning.count >= 1 && conditioning.lower <= conditioning.upper,
                "task: uniform conditioning grid needs lower <= upper and at least one point");
        break;
      case ConditioningPolicy::Kind::kFixed:
        require(conditioning.values.size() == s.size(), "task: fixed conditioning value must have |s| entries");
        break;
    }
  }
}

std::string MatchingTask::describe() const {
  std::string out = fmt::format("{} s={} t={} transform={} divergence={}", family.empty() ? "task" : family,
                                s.to_string(), t.to_string(), transform.describe(), to_string(divergence));
  if (!s.empty()) out += " conditioning=" + conditioning.describe();
  return out;
}

double RatioLaw::draw(Rng& rng) const { return kind == Kind::kFixed ? value : rng.beta(a, b); }

std::string RatioLaw::describe() const {
  return kind == Kind::kFixed ? "fixed " + format_double(value)
                              : fmt::format("beta {} {}", format_double(a), format_double(b));
}

// ---------------------------------------------------------------------------
// distributions

void TaskDistribution::validate(int dim) const {
  require(!templates.empty(), "task distribution: no entries");
  require(templates.size() == probabilities.size(), "task distribution: one probability per template");
  double total = 0.0;
  for (double p : probabilities) {
    require(std::isfinite(p) && p >= 0.0, "task distribution: probabilities must be nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, fmt::format("task distribution: probabilities sum to {}", format_double(total)));
  for (const auto& tmpl : templates) {
    check_transform(tmpl.transform, dim);
    if (tmpl.pattern == TaskTemplate::Pattern::kFixed) {
      MatchingTask probe{tmpl.family, Transform::identity(), tmpl.s, tmpl.t, tmpl.divergence, tmpl.conditioning};
      probe.validate(dim);
    }
    if (tmpl.pattern == TaskTemplate::Pattern::kMaskAndPredict)
      require(dim >= 2, "task distribution: mask_and_predict needs at least 2 dimensions");
  }
}

MatchingTask sample_task(const TaskDistribution& dist, int dim, Rng& rng) {
  const std::size_t which = rng.categorical(dist.probabilities);
  const TaskTemplate& tmpl = dist.templates[which];
  MatchingTask task;
  task.family = tmpl.family;
  task.divergence = tmpl.divergence;
  task.conditioning = tmpl.conditioning;
  task.transform = materialize(tmpl.transform, rng);
  switch (tmpl.pattern) {
    case TaskTemplate::Pattern::kFixed:
      task.s = tmpl.s;
      task.t = tmpl.t;
      break;
    case TaskTemplate::Pattern::kRandomMarginal:
      task.t = IndexSet({static_cast<int>(rng.index(dim))});
      break;
    case TaskTemplate::Pattern::kMaskAndPredict: {
      const double r = tmpl.ratio.draw(rng);
      const int ns = std::clamp(static_cast<int>(std::floor(r * dim + 0.5)), 0, dim - 1);
      std::vector<int> order(dim);
      std::iota(order.begin(), order.end(), 0);
      for (int i = 0; i < ns; ++i) std::swap(order[i], order[i + rng.index(dim - i)]);
      task.s = IndexSet(std::vector<int>(order.begin(), order.begin() + ns));
      task.t = task.s.complement(dim);
      break;
    }
    case TaskTemplate::Pattern::kPermutation: {
      std::vector<int> z(dim);
      std::iota(z.begin(), z.end(), 0);
      for (int i = dim - 1; i > 0; --i) std::swap(z[i], z[rng.index(i + 1)]);
      const int cut = static_cast<int>(rng.index(dim));
      task.s = IndexSet(std::vector<int>(z.begin(), z.begin() + cut));
      task.t = IndexSet({z[cut]});
      break;
    }
  }
  task.validate(dim);
  return task;
}

// ---------------------------------------------------------------------------
// losses

namespace {

McEstimate js_mc(const Gmm& p, const Gmm& q, int n, Rng& rng) {
  auto half = [&](const Gmm& a, const Gmm& b) {
    const GmmSample s = sample(a, n, rng);
    const VectorXd la = log_density(a, s.points);
    const VectorXd lb = log_density(b, s.points);
    VectorXd v(n);
    for (int j = 0; j < n; ++j) {
      const double top = std::max(la[j], lb[j]);
      const double lm = top + std::log1p(std::exp(-std::abs(la[j] - lb[j]))) - std::numbers::ln2;
      v[j] = la[j] - lm;
    }
    return v;
  };
  const VectorXd vp = half(p, q);
  const VectorXd vq = half(q, p);
  const VectorXd v = 0.5 * (vp + vq);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (n - 1);
  return {mean, std::sqrt(var / n)};
}

bool is_full(const IndexSet& t, int dim) { return static_cast<int>(t.size()) == dim; }

std::vector<VectorXd> conditioning_values(const ConditioningPolicy& policy, const Gmm& target_view,
                                          const IndexSet& s, Rng& rng) {
  std::vector<VectorXd> out;
  switch (policy.kind) {
    case ConditioningPolicy::Kind::kTargetMarginal: {
      const GmmSample draws = sample(marginalize(target_view, s), policy.count, rng);
      for (int j = 0; j < policy.count; ++j) out.push_back(draws.points.row(j).transpose());
      break;
    }
    case ConditioningPolicy::Kind::kUniformGrid: {
      const int n = policy.count;
      const int axes = static_cast<int>(s.size());
      std::vector<int> idx(axes, 0);
      auto coord = [&](int i) {
        return n == 1 ? 0.5 * (policy.lower + policy.upper)
                      : policy.lower + (policy.upper - policy.lower) * i / (n - 1);
      };
      while (true) {
        VectorXd v(axes);
        for (int a = 0; a < axes; ++a) v[a] = coord(idx[a]);
        out.push_back(std::move(v));
        int a = axes - 1;
        while (a >= 0 && ++idx[a] == n) idx[a--] = 0;
        if (a < 0) break;
      }
      break;
    }
    case ConditioningPolicy::Kind::kFixed:
      out.push_back(Eigen::Map<const VectorXd>(policy.values.data(), static_cast<Eigen::Index>(policy.values.size())));
      break;
  }
  return out;
}

}  // namespace

double divergence_value(Divergence divergence, const Gmm& model_side, const Gmm& target_side,
                        const EstimatorSettings& settings, Rng& rng) {
  require(model_side.dim() == target_side.dim(), "divergence: dimension mismatch");
  const int d = model_side.dim();
  if (d <= 2) {
    const GridSpec grid = default_grid(model_side, target_side, d == 1 ? settings.points_1d : settings.points_2d,
                                       settings.bound_sigmas);
    switch (divergence) {
      case Divergence::kReverseKl: return kl_grid(model_side, target_side, grid);
      case Divergence::kForwardKl: return kl_grid(target_side, model_side, grid);
      case Divergence::kJs: return js_grid(model_side, target_side, grid);
    }
  }
  switch (divergence) {
    case Divergence::kReverseKl: return kl_mc(model_side, target_side, settings.mc_samples, rng).estimate;
    case Divergence::kForwardKl: return kl_mc(target_side, model_side, settings.mc_samples, rng).estimate;
    case Divergence::kJs: return js_mc(model_side, target_side, settings.mc_samples, rng).estimate;
  }
  return 0.0;
}

double task_loss(const MatchingTask& task, const Gmm& model, const Gmm& target, const EstimatorSettings& settings) {
  require(model.dim() == target.dim(), "task_loss: model and target dims differ");
  task.validate(model.dim());
  const Gmm p = apply_transform(model, task.transform);
  const Gmm q = apply_transform(target, task.transform);
  Rng rng(settings.seed);
  if (task.s.empty()) {
    if (is_full(task.t, p.dim())) return divergence_value(task.divergence, p, q, settings, rng);
    return divergence_value(task.divergence, marginalize(p, task.t), marginalize(q, task.t), settings, rng);
  }
  const auto values = conditioning_values(task.conditioning, q, task.s, rng);
  double total = 0.0;
  for (const auto& x_s : values)
    total += divergence_value(task.divergence, condition(p, task.s, x_s, task.t), condition(q, task.s, x_s, task.t),
                              settings, rng);
  return total / static_cast<double>(values.size());
}

LinearGaussianChannel pipeline_for(const MatchingTask& task, int dim) {
  task.validate(dim);
  require(task.s.empty(),
          "pipeline: conditioning stages are not differentiable (conditional weights depend on theta)");
  LinearGaussianChannel ch = LinearGaussianChannel::identity(dim);
  append(ch, task.transform);
  if (is_full(task.t, dim)) return ch;
  LinearGaussianChannel out{MatrixXd(task.t.size(), dim), MatrixXd(task.t.size(), task.t.size())};
  for (std::size_t r = 0; r < task.t.size(); ++r) {
    out.map.row(r) = ch.map.row(task.t[r]);
    for (std::size_t c = 0; c < task.t.size(); ++c) out.noise_cov(r, c) = ch.noise_cov(task.t[r], task.t[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// presets

namespace {

TaskTemplate fixed_template(std::string family, IndexSet s, IndexSet t, Divergence d) {
  TaskTemplate tmpl;
  tmpl.family = std::move(family);
  tmpl.s = std::move(s);
  tmpl.t = std::move(t);
  tmpl.divergence = d;
  return tmpl;
}

}  // namespace

TaskDistribution preset(const std::string& name, const PresetParams& params) {
  const int d = params.dim;
  require(d >= 1, "preset: dim must be positive");
  // prediction-style presets match q(T|S) to p(T|S) in the forward direction;
  // the distribution-matching presets use reverse KL
  const Divergence predictive = params.divergence.value_or(Divergence::kForwardKl);
  const Divergence matching = params.divergence.value_or(Divergence::kReverseKl);
  TaskDistribution dist;
  dist.phase = name;
  if (name == "joint") {
    dist.templates.push_back(fixed_template("joint", {}, IndexSet::range(0, d), matching));
    dist.probabilities = {1.0};
  } else if (name == "next_token") {
    for (int t = 0; t < d; ++t) {
      dist.templates.push_back(
          fixed_template(fmt::format("next_token_{}", t), IndexSet::range(0, t), IndexSet({t}), predictive));
      dist.probabilities.push_back(1.0 / d);
    }
  } else if (name == "mask_and_predict") {
    TaskTemplate tmpl;
    tmpl.family = "mask_and_predict";
    tmpl.pattern = TaskTemplate::Pattern::kMaskAndPredict;
    tmpl.divergence = predictive;
    tmpl.ratio = params.source_ratio;
    dist.templates.push_back(std::move(tmpl));
    dist.probabilities = {1.0};
  } else if (name == "permutation") {
    TaskTemplate tmpl;
    tmpl.family = "permutation";
    tmpl.pattern = TaskTemplate::Pattern::kPermutation;
    tmpl.divergence = predictive;
    dist.templates.push_back(std::move(tmpl));
    dist.probabilities = {1.0};
  } else if (name == "marginal_sweep") {
    TaskTemplate tmpl;
    tmpl.family = "marginal";
    tmpl.transform = Transform::random_orthogonal();
    tmpl.pattern = TaskTemplate::Pattern::kRandomMarginal;
    tmpl.divergence = matching;
    dist.templates.push_back(std::move(tmpl));
    dist.probabilities = {1.0};
  } else if (name == "noising_ladder") {
    require(!params.noise_vars.empty(), "preset noising_ladder: variance list is empty");
    for (double v : params.noise_vars) {
      TaskTemplate tmpl = fixed_template(fmt::format("joint_noise_{}", format_double(v)), {}, IndexSet::range(0, d), matching);
      tmpl.transform = Transform::noising(v);
      dist.templates.push_back(std::move(tmpl));
      dist.probabilities.push_back(1.0 / static_cast<double>(params.noise_vars.size()));
    }
  } else {
    fail(ErrorKind::kInvalidArgument, "preset: unknown name '" + name + "'");
  }
  dist.validate(d);
  return dist;
}

}  // namespace biglearn
