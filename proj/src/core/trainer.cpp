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

#include "core/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "core/text_io.hpp"

namespace biglearn {

ThetaModel init_model(const InitSpec& spec, Rng& rng) {
  require(spec.components >= 1 && spec.dim >= 1, "init_model: components and dim must be positive");
  require(spec.mean_var >= 0.0 && spec.scale_var > 0.0, "init_model: variances must be positive");
  const PositivityMap map{spec.positivity_floor};
  const int k = spec.components;
  const int d = spec.dim;
  VectorXd p(ThetaModel::num_params(k, d));
  const double sd = std::sqrt(spec.mean_var);
  for (int i = 0; i < k * d; ++i) p[i] = spec.mean_center + sd * rng.normal();
  const double diag = map.inverse(std::sqrt(spec.scale_var));
  int off = k * d;
  for (int i = 0; i < k; ++i)
    for (int r = 0; r < d; ++r)
      for (int c = 0; c <= r; ++c) p[off++] = r == c ? diag : 0.0;
  return ThetaModel(k, d, std::move(p), map);
}

void TrainConfig::validate(int dim) const {
  require(lr > 0.0 && std::isfinite(lr), "train: lr must be positive");
  require(n_samples >= 2, "train: n_samples must be at least 2");
  require(total_iters >= 1, "train: total_iters must be positive");
  require(inner_steps >= 1, "train: inner_steps must be at least 1");
  require(snapshot_every >= 1, "train: snapshot_every must be positive");
  require(coverage_radius > 0.0, "train: coverage_radius must be positive");
  require(!phases.empty() && phases.front().start_iter == 0, "train: the first phase must start at iteration 0");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i) require(phases[i].start_iter > phases[i - 1].start_iter, "train: phases must have increasing start_iter");
    phases[i].tasks.validate(dim);
    for (const auto& tmpl : phases[i].tasks.templates) {
      // the pathwise estimator covers reverse KL through unconditioned pipelines only
      require(tmpl.divergence == Divergence::kReverseKl,
              fmt::format("train: task '{}' in phase '{}' uses {}; training supports reverse_kl only", tmpl.family,
                          phases[i].name, to_string(tmpl.divergence)));
      const bool unconditioned = (tmpl.pattern == TaskTemplate::Pattern::kFixed && tmpl.s.empty()) ||
                                 tmpl.pattern == TaskTemplate::Pattern::kRandomMarginal;
      require(unconditioned, fmt::format("train: task '{}' in phase '{}' conditions on coordinates; conditional "
                                         "matchings cannot be trained",
                                         tmpl.family, phases[i].name));
    }
  }
}

const Phase& TrainConfig::phase_at(int iteration) const {
  const Phase* active = &phases.front();
  for (const auto& p : phases)
    if (p.start_iter <= iteration) active = &p;
  return *active;
}

MatrixXd means_matrix(const Gmm& g) {
  MatrixXd m(g.size(), g.dim());
  for (int i = 0; i < g.size(); ++i) m.row(i) = g.mean(i).transpose();
  return m;
}

ModeCoverageReport mode_coverage(const MatrixXd& fitted_means, const MatrixXd& true_means, double radius,
                                 int iteration) {
  require(radius > 0.0, "mode_coverage: radius must be positive");
  require(true_means.cols() == fitted_means.cols(), "mode_coverage: dimension mismatch");
  ModeCoverageReport rep;
  rep.iteration = iteration;
  rep.radius = radius;
  rep.covered.resize(true_means.rows());
  for (Eigen::Index j = 0; j < true_means.rows(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < fitted_means.rows(); ++i)
      best = std::min(best, (fitted_means.row(i) - true_means.row(j)).norm());
    rep.covered[j] = best < radius;
    rep.count += rep.covered[j] ? 1 : 0;
  }
  return rep;
}

ModeCoverageReport mode_coverage(const Gmm& model, const MatrixXd& true_means, double radius, int iteration) {
  return mode_coverage(means_matrix(model), true_means, radius, iteration);
}

namespace {

bool all_finite(const PathwiseEstimate& e) { return std::isfinite(e.loss) && e.grad.allFinite(); }

}  // namespace

Trajectory train(ThetaModel model, const Gmm& target, const TrainConfig& cfg) {
  require(model.dim() == target.dim(), "train: model and target dims differ");
  cfg.validate(model.dim());
  Rng rng(cfg.seed);
  const MatrixXd true_means = means_matrix(target);
  const std::set<int> extra(cfg.snapshot_iters.begin(), cfg.snapshot_iters.end());

  Trajectory traj{{}, model, cfg, {}};
  std::map<std::string, double> loss_sum;
  std::map<std::string, long> loss_n;

  auto snapshot = [&](int iteration, const std::string& phase) {
    Snapshot s;
    s.iteration = iteration;
    s.phase = phase;
    s.theta = model.params();
    s.family_counts = traj.counters.tasks_per_family;
    for (const auto& [family, sum] : loss_sum) s.running_losses[family] = sum / static_cast<double>(loss_n[family]);
    // means only: the scales may be degenerate when this records an abort
    MatrixXd means(model.components(), model.dim());
    for (int i = 0; i < model.components(); ++i) means.row(i) = model.mean(i).transpose();
    s.coverage = mode_coverage(means, true_means, cfg.coverage_radius, iteration).count;
    loss_sum.clear();
    loss_n.clear();
    return s;
  };

  traj.snapshots.push_back(snapshot(0, cfg.phase_at(0).name));
  for (int it = 0; it < cfg.total_iters; ++it) {
    const Phase& phase = cfg.phase_at(it);
    const MatchingTask task = sample_task(phase.tasks, model.dim(), rng);
    const LinearGaussianChannel channel = pipeline_for(task, model.dim());
    traj.counters.tasks_per_family[task.family] += 1;
    for (int step = 0; step < cfg.inner_steps; ++step) {
      PathwiseEstimate est;
      std::string failure;
      try {
        est = reverse_kl_pathwise_grad(model, target, channel, cfg.n_samples, rng);
        if (!all_finite(est)) failure = std::isfinite(est.loss) ? "non-finite gradient" : "non-finite loss";
      } catch (const Error& e) {
        // parameters that overflowed into a degenerate model surface here
        if (e.kind() != ErrorKind::kNumerical) throw;
        failure = fmt::format("non-finite model state ({})", e.what());
      }
      traj.counters.gradient_steps += 1;
      traj.counters.samples_drawn += cfg.n_samples;
      if (!failure.empty()) {
        Snapshot diag = snapshot(it, phase.name);
        throw TrainingAbort(fmt::format("{} at iteration {} (step {}) on task [{}]", failure, it, step, task.describe()),
                            std::move(diag), task.describe());
      }
      if (cfg.grad_clip > 0.0) {
        const double norm = est.grad.norm();
        if (norm > cfg.grad_clip) est.grad *= cfg.grad_clip / norm;
      }
      model.set_params(model.params() - cfg.lr * est.grad);
      loss_sum[task.family] += est.loss;
      loss_n[task.family] += 1;
    }
    traj.counters.outer_iterations += 1;
    const int done = it + 1;
    if (done % cfg.snapshot_every == 0 || extra.contains(done) || done == cfg.total_iters)
      traj.snapshots.push_back(snapshot(done, phase.name));
  }
  traj.final_model = model;
  return traj;
}

// ---------------------------------------------------------------------------
// benchmark

Gmm lattice_gmm(const LatticeSpec& spec) {
  require(spec.points_per_axis >= 1 && spec.spacing > 0.0 && spec.component_var > 0.0, "lattice: invalid spec");
  const int n = spec.points_per_axis;
  const int k = n * n;
  const double half = 0.5 * (n - 1) * spec.spacing;
  std::vector<VectorXd> means;
  std::vector<MatrixXd> scales;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      VectorXd m(2);
      m << -half + a * spec.spacing, -half + b * spec.spacing;
      means.push_back(m);
      scales.push_back(std::sqrt(spec.component_var) * MatrixXd::Identity(2, 2));
    }
  return Gmm(VectorXd::Constant(k, 1.0 / k), std::move(means), std::move(scales));
}

Benchmark make_25gmm_benchmark() {
  Benchmark b{lattice_gmm({}), InitSpec{}, TrainConfig{}};
  TrainConfig& cfg = b.config;
  cfg.snapshot_iters = {200, 800, 1400, 6000};

  TaskTemplate joint;
  joint.family = "joint";
  joint.t = IndexSet::range(0, 2);
  TaskTemplate marginal;
  marginal.family = "marginal";
  marginal.transform = Transform::random_orthogonal();
  marginal.pattern = TaskTemplate::Pattern::kRandomMarginal;

  cfg.phases.push_back({"burnin", 0, TaskDistribution{{marginal}, {1.0}, "burnin"}});
  cfg.phases.push_back({"main", 200, TaskDistribution{{joint, marginal}, {0.1, 0.9}, "main"}});
  return b;
}

TrainConfig joint_only_config(const TrainConfig& base) {
  TrainConfig cfg = base;
  TaskTemplate joint;
  joint.family = "joint";
  joint.t = IndexSet::range(0, 2);
  cfg.phases = {{"joint", 0, TaskDistribution{{joint}, {1.0}, "joint"}}};
  return cfg;
}

// ---------------------------------------------------------------------------
// trajectory records

namespace {

template <typename V>
std::string json_object(const std::map<std::string, V>& m) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : m) {
    if (!first) out += ",";
    first = false;
    if constexpr (std::is_floating_point_v<V>)
      out += json_string(k) + ":" + (std::isfinite(v) ? format_double(v) : std::string("null"));
    else
      out += json_string(k) + ":" + std::to_string(v);
  }
  return out + "}";
}

}  // namespace

std::string trajectory_to_ndjson(const Trajectory& traj, const Gmm& target) {
  const TrainConfig& c = traj.config;
  std::string phases = "[";
  for (std::size_t i = 0; i < c.phases.size(); ++i)
    phases += fmt::format("{}{{\"name\":{},\"start_iter\":{}}}", i ? "," : "", json_string(c.phases[i].name),
                          c.phases[i].start_iter);
  phases += "]";
  std::string out = fmt::format(
      "{{\"type\":\"header\",\"format\":\"biglearn-trajectory-1\",\"seed\":{},\"components\":{},\"dim\":{},"
      "\"positivity_floor\":{},\"lr\":{},\"n_samples\":{},\"total_iters\":{},\"inner_steps\":{},"
      "\"snapshot_every\":{},\"grad_clip\":{},\"coverage_radius\":{},\"phases\":{},"
      "\"gradient_steps\":{},\"samples_drawn\":{},\"target\":{}}}\n",
      c.seed, traj.final_model.components(), traj.final_model.dim(), format_double(traj.final_model.map().floor),
      format_double(c.lr), c.n_samples, c.total_iters, c.inner_steps, c.snapshot_every, format_double(c.grad_clip),
      format_double(c.coverage_radius), phases, traj.counters.gradient_steps, traj.counters.samples_drawn,
      to_text(target));
  for (const auto& s : traj.snapshots) {
    out += fmt::format(
        "{{\"type\":\"snapshot\",\"iteration\":{},\"phase\":{},\"theta\":{},\"family_counts\":{},"
        "\"running_losses\":{},\"coverage\":{}}}\n",
        s.iteration, json_string(s.phase), json_array(s.theta), json_object(s.family_counts),
        json_object(s.running_losses), s.coverage);
  }
  return out;
}

TrajectoryFile trajectory_from_ndjson(const std::string& text) {
  TrajectoryFile tf;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        tf.components = j.at("components").get<int>();
        tf.dim = j.at("dim").get<int>();
        tf.positivity_floor = j.at("positivity_floor").get<double>();
        tf.seed = j.at("seed").get<std::uint64_t>();
        tf.coverage_radius = j.at("coverage_radius").get<double>();
        if (j.contains("target")) tf.target_text = j.at("target").dump();
        have_header = true;
      } else if (type == "snapshot") {
        require(have_header, "snapshot record before the header");
        Snapshot s;
        s.iteration = j.at("iteration").get<int>();
        s.phase = j.at("phase").get<std::string>();
        const auto theta = j.at("theta").get<std::vector<double>>();
        require(static_cast<int>(theta.size()) == ThetaModel::num_params(tf.components, tf.dim),
                "theta has the wrong length");
        s.theta = Eigen::Map<const VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
        s.family_counts = j.at("family_counts").get<std::map<std::string, long>>();
        for (const auto& [k, v] : j.at("running_losses").items())
          s.running_losses[k] = v.is_null() ? std::nan("") : v.get<double>();
        s.coverage = j.at("coverage").get<int>();
        if (!tf.snapshots.empty())
          require(s.iteration > tf.snapshots.back().iteration, "snapshot iterations must increase");
        tf.snapshots.push_back(std::move(s));
      } else {
        require(false, "unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kInvalidArgument, fmt::format("trajectory line {}: {}", line_no, e.what()));
    } catch (const Error& e) {
      fail(ErrorKind::kInvalidArgument, fmt::format("trajectory line {}: {}", line_no, e.what()));
    }
  }
  require(have_header, "trajectory: missing header record");
  require(!tf.snapshots.empty(), "trajectory: no snapshot records");
  return tf;
}

}  // namespace biglearn
