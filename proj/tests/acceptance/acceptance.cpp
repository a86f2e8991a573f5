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


// Acceptance suite: one PASS/FAIL line per criterion. Runs the bundled configs
// end to end through the shared library and checks their outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "biglearn/biglearn.h"
#include "core/config.hpp"
#include "core/divergence.hpp"
#include "core/surfaces.hpp"
#include "core/tasks.hpp"
#include "core/text_io.hpp"

namespace fs = std::filesystem;
using namespace biglearn;

namespace {

fs::path g_work;
const fs::path kConfigs = fs::path(BIGLEARN_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct RunResult {
  int exit_code = -1;
  double seconds = 0.0;
  fs::path dir;
  std::string message;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunResult run(const fs::path& config, const std::string& out_name, int threads = 1,
              std::optional<std::uint64_t> seed = std::nullopt) {
  RunResult r;
  r.dir = g_work / out_name;
  fs::remove_all(r.dir);
  const std::string cfg = (config.is_absolute() ? config : kConfigs / config).string();
  const std::string out = r.dir.string();
  bl_run_options opt{cfg.c_str(), out.c_str(), seed.has_value(), seed.value_or(0), threads};
  const auto t0 = std::chrono::steady_clock::now();
  bl_run(&opt, BL_COMMAND_ANY, &r.exit_code);
  r.seconds = seconds_since(t0);
  r.message = bl_last_run_message();
  return r;
}

// Runs are shared between criteria; each is executed once on first use.
const RunResult& cached(const std::string& config, const std::string& out_name) {
  static std::map<std::string, RunResult> runs;
  auto it = runs.find(out_name);
  if (it == runs.end()) {
    std::fprintf(stderr, "  running %s ...\n", config.c_str());
    it = runs.emplace(out_name, run(config, out_name)).first;
    std::fprintf(stderr, "  %s finished in %.1f s (exit %d)\n", config.c_str(), it->second.seconds,
                 it->second.exit_code);
  }
  return it->second;
}

SurfaceGrid load_surface(const fs::path& p) { return surface_from_csv(read_file(p.string())); }

double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return (a - b).cwiseAbs().maxCoeff();
}

int nearest_index(const std::vector<double>& axis, double v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(axis.size()); ++i)
    if (std::abs(axis[i] - v) < std::abs(axis[best] - v)) best = i;
  return best;
}

std::vector<LocalMinimum> globals_of(const std::vector<LocalMinimum>& minima) {
  std::vector<LocalMinimum> out;
  std::copy_if(minima.begin(), minima.end(), std::back_inserter(out), [](const auto& m) { return m.is_global; });
  return out;
}

std::string positions(const std::vector<LocalMinimum>& minima) {
  std::string out;
  for (const auto& m : minima) out += fmt::format("{}({:.2f},{:.2f})", out.empty() ? "" : " ", m.mu1, m.mu2);
  return out.empty() ? "none" : out;
}

Outcome fail_run(const RunResult& r) {
  return {false, fmt::format("run in {} exited {}: {}", r.dir.string(), r.exit_code, r.message)};
}

// ---------------------------------------------------------------------------

Outcome joint_global_optima() {
  const RunResult& r = cached("fig2.cfg", "fig2");
  if (r.exit_code != 0) return fail_run(r);
  const SurfaceGrid g = load_surface(r.dir / "joint.csv");
  const auto globals = globals_of(find_local_minima(g));
  const std::set<std::pair<int, int>> expected{
      {nearest_index(g.mu1, -1.0), nearest_index(g.mu2, 1.0)}, {nearest_index(g.mu1, 1.0), nearest_index(g.mu2, -1.0)}};
  std::set<std::pair<int, int>> found;
  double worst = 0.0;
  for (const auto& m : globals) {
    found.insert({m.row, m.col});
    worst = std::max(worst, m.loss);
  }
  const bool ok = globals.size() == 2 && found == expected && worst < 1e-6 && r.seconds < 300.0 &&
                  g.loss.rows() == 151 && g.loss.cols() == 151;
  return {ok, fmt::format("{} global minima at {}, max loss {:.3g}, grid {}x{}, fig2 run {:.1f} s", globals.size(),
                          positions(globals), worst, g.loss.rows(), g.loss.cols(), r.seconds)};
}

Outcome flat_second_marginal() {
  const RunResult& r = cached("fig2.cfg", "fig2");
  if (r.exit_code != 0) return fail_run(r);
  const SurfaceGrid g = load_surface(r.dir / "marginal_x2.csv");
  const double worst = g.loss.cwiseAbs().maxCoeff();
  const RunConfig cfg = load_config((kConfigs / "fig2.cfg").string());
  const auto job = std::find_if(cfg.surfaces.begin(), cfg.surfaces.end(),
                                [](const SurfaceJob& j) { return j.spec.name == "marginal_x2"; });
  const auto t0 = std::chrono::steady_clock::now();
  const SurfaceGrid direct = sweep(job->spec, 1);
  const double secs = seconds_since(t0);
  const bool ok = worst <= 1e-9 && secs < 60.0 && direct.loss == g.loss;
  return {ok, fmt::format("max |loss| {:.3g} over {} points, single-threaded sweep {:.2f} s", worst, g.loss.size(), secs)};
}

Outcome rotation_invariance() {
  const RunResult& r2 = cached("fig2.cfg", "fig2");
  const RunResult& r3 = cached("fig3.cfg", "fig3");
  if (r2.exit_code != 0) return fail_run(r2);
  if (r3.exit_code != 0) return fail_run(r3);
  const SurfaceGrid base = load_surface(r2.dir / "joint.csv");
  bool ok = true;
  std::string detail;
  for (int deg : {15, 45, 60}) {
    const double d = max_abs_diff(load_surface(r3.dir / fmt::format("joint_rot{}.csv", deg)).loss, base.loss);
    ok = ok && d < 1e-6;
    detail += fmt::format("{}{} deg: max diff {:.3g}", detail.empty() ? "" : ", ", deg, d);
  }
  return {ok, detail};
}

Outcome cooperation_principle() {
  const RunResult& r2 = cached("fig2.cfg", "fig2");
  const RunResult& r3 = cached("fig3.cfg", "fig3");
  if (r2.exit_code != 0) return fail_run(r2);
  if (r3.exit_code != 0) return fail_run(r3);
  const auto reference = globals_of(find_local_minima(load_surface(r2.dir / "joint.csv")));
  auto within_cell = [](const LocalMinimum& a, const std::vector<LocalMinimum>& set) {
    return std::any_of(set.begin(), set.end(),
                       [&](const auto& b) { return std::abs(a.row - b.row) <= 1 && std::abs(a.col - b.col) <= 1; });
  };
  bool globals_agree = !reference.empty();
  std::set<std::set<std::pair<int, int>>> distinct_nonglobal;
  std::string detail;
  int surfaces = 0;
  for (int deg : {15, 45, 60})
    for (const char* kind : {"marginal_y1", "marginal_y2", "conditional_y1_given_y2", "conditional_y2_given_y1"}) {
      const auto minima = find_local_minima(load_surface(r3.dir / fmt::format("{}_rot{}.csv", kind, deg)));
      const auto globals = globals_of(minima);
      bool agree = !globals.empty();
      for (const auto& m : globals) agree = agree && within_cell(m, reference);
      for (const auto& m : reference) agree = agree && within_cell(m, globals);
      globals_agree = globals_agree && agree;
      std::set<std::pair<int, int>> nonglobal;
      for (const auto& m : minima)
        if (!m.is_global) nonglobal.insert({m.row, m.col});
      distinct_nonglobal.insert(nonglobal);
      ++surfaces;
      detail += fmt::format("{}{}@{}: {}g/{}ng{}", detail.empty() ? "" : "; ", kind, deg, globals.size(),
                            nonglobal.size(), agree ? "" : " (global mismatch)");
    }
  const bool ok = globals_agree && distinct_nonglobal.size() >= 2;
  return {ok, fmt::format("{} surfaces, global minima agree: {}, distinct non-global sets: {} [{}]", surfaces,
                          globals_agree ? "yes" : "no", distinct_nonglobal.size(), detail)};
}

Outcome noising_ladder() {
  const RunResult& r8 = cached("fig8.cfg", "fig8");
  const RunResult& r5 = cached("fig5.cfg", "fig5");
  if (r8.exit_code != 0) return fail_run(r8);
  if (r5.exit_code != 0) return fail_run(r5);
  const RunConfig cfg = load_config((kConfigs / "fig8.cfg").string());
  std::vector<int> counts;
  std::vector<int> raw;
  for (const auto& job : cfg.surfaces) {
    const auto minima = find_local_minima(load_surface(r8.dir / job.file));
    counts.push_back(count_nonglobal_up_to_swap(minima));
    raw.push_back(static_cast<int>(std::count_if(minima.begin(), minima.end(), [](const auto& m) { return !m.is_global; })));
  }
  bool ok = !counts.empty() && counts.back() == 0 && counts.front() > 0;
  for (std::size_t i = 1; i < counts.size(); ++i) ok = ok && counts[i] <= counts[i - 1];
  // the zero-noise rung is the plain sigma^2 = 0.02 surface
  const double d = max_abs_diff(load_surface(r8.dir / cfg.surfaces.front().file).loss,
                                load_surface(r5.dir / "joint.csv").loss);
  ok = ok && d == 0.0;
  return {ok, fmt::format("non-global minima up to label swap per rung [{}] (raw grid points [{}]), "
                          "zero rung vs fig5 max diff {:.3g}",
                          fmt::join(counts, ", "), fmt::join(raw, ", "), d)};
}

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20260516);
  const double h = 1e-5;
  const double floor = 1e-6;
  double worst = 0.0;
  int joint = 0, marginal = 0, noised = 0;
  for (int c = 0; c < 20; ++c) {
    const int k = 1 + static_cast<int>(rng.index(3));
    const int kq = 1 + static_cast<int>(rng.index(3));
    VectorXd params(ThetaModel::num_params(k, 2));
    for (int i = 0; i < params.size(); ++i) params[i] = rng.normal() * (i < 2 * k ? 1.5 : 0.6);
    const ThetaModel model(k, 2, params);
    std::vector<VectorXd> means;
    std::vector<MatrixXd> scales;
    for (int i = 0; i < kq; ++i) {
      means.push_back(VectorXd::NullaryExpr(2, [&] { return 1.5 * rng.normal(); }));
      MatrixXd l = MatrixXd::Zero(2, 2);
      l(0, 0) = 0.4 + rng.uniform();
      l(1, 1) = 0.4 + rng.uniform();
      l(1, 0) = 0.5 * rng.normal();
      scales.push_back(l);
    }
    const Gmm target(VectorXd::Constant(kq, 1.0 / kq), means, scales);

    MatchingTask task;
    task.t = IndexSet::range(0, 2);
    switch (c % 3) {
      case 0: ++joint; break;
      case 1:
        ++marginal;
        task.transform = Transform::rotation_degrees(360.0 * rng.uniform());
        task.t = IndexSet({static_cast<int>(rng.index(2))});
        break;
      default:
        ++noised;
        task.transform = Transform::composite({Transform::rotation_degrees(360.0 * rng.uniform()),
                                               Transform::noising(0.05 + 0.5 * rng.uniform())});
        if (rng.uniform() < 0.5) task.t = IndexSet({static_cast<int>(rng.index(2))});
        break;
    }
    const LinearGaussianChannel channel = pipeline_for(task, 2);
    const PathwiseDraws draws = draw_pathwise(model, channel, 100, rng);
    const PathwiseEstimate est = reverse_kl_pathwise(model, target, channel, draws);
    for (int i = 0; i < params.size(); ++i) {
      VectorXd up = params, down = params;
      up[i] += h;
      down[i] -= h;
      const double fd = (reverse_kl_pathwise(ThetaModel(k, 2, up), target, channel, draws).loss -
                         reverse_kl_pathwise(ThetaModel(k, 2, down), target, channel, draws).loss) /
                        (2 * h);
      const double rel = std::abs(est.grad[i] - fd) / std::max({std::abs(est.grad[i]), std::abs(fd), floor});
      worst = std::max(worst, rel);
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0,
          fmt::format("20 configurations ({} joint, {} rotated marginal, {} noised), worst per-coordinate relative "
                      "error {:.3g}, {:.1f} s",
                      joint, marginal, noised, worst, secs)};
}

int final_coverage(const fs::path& dir) {
  const auto j = nlohmann::json::parse(read_file((dir / "summary.json").string()));
  return j.at("coverage").get<int>();
}

Outcome exploration() {
  std::vector<int> big, joint;
  double slowest = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RunResult b = run("fig4_biglearn.cfg", fmt::format("fig4_biglearn_seed{}", seed), 1, seed);
    if (b.exit_code != 0) return fail_run(b);
    const RunResult j = run("fig4_joint.cfg", fmt::format("fig4_joint_seed{}", seed), 1, seed);
    if (j.exit_code != 0) return fail_run(j);
    big.push_back(final_coverage(b.dir));
    joint.push_back(final_coverage(j.dir));
    slowest = std::max({slowest, b.seconds, j.seconds});
  }
  const auto big_ok = std::count_if(big.begin(), big.end(), [](int c) { return c >= 20; });
  const auto joint_ok = std::count_if(joint.begin(), joint.end(), [](int c) { return c <= 5; });
  const bool ok = big_ok >= 8 && joint_ok >= 8 && slowest <= 600.0;
  return {ok, fmt::format("big learning coverage by seed [{}] ({} of 10 reach 20/25); joint-only [{}] ({} of 10 at "
                          "most 5/25); slowest run {:.1f} s",
                          fmt::join(big, ", "), big_ok, fmt::join(joint, ", "), joint_ok, slowest)};
}

struct Pair {
  std::string name;
  Gmm p;
  Gmm q;
  std::optional<double> exact;
};

Gmm gauss1(double m, double var) { return Gmm(VectorXd::Ones(1), {VectorXd::Constant(1, m)}, {MatrixXd::Constant(1, 1, std::sqrt(var))}); }

Gmm from_cov(std::vector<double> w, std::vector<std::vector<double>> means, std::vector<std::vector<double>> covs) {
  std::vector<VectorXd> m;
  std::vector<MatrixXd> c;
  for (std::size_t i = 0; i < w.size(); ++i) {
    m.push_back(Eigen::Map<const VectorXd>(means[i].data(), static_cast<Eigen::Index>(means[i].size())));
    const auto d = static_cast<Eigen::Index>(means[i].size());
    c.push_back(Eigen::Map<const MatrixXd>(covs[i].data(), d, d));
  }
  return Gmm::from_covariances(Eigen::Map<const VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())), m, c);
}

double gaussian_kl(const VectorXd& m0, const MatrixXd& s0, const VectorXd& m1, const MatrixXd& s1) {
  const MatrixXd s1inv = s1.inverse();
  const VectorXd dm = m1 - m0;
  return 0.5 * ((s1inv * s0).trace() + dm.dot(s1inv * dm) - static_cast<double>(m0.size()) +
                std::log(s1.determinant() / s0.determinant()));
}

Outcome estimator_cross_validation() {
  std::vector<Pair> pairs;
  pairs.push_back({"N(0,1)|N(1,1)", gauss1(0, 1), gauss1(1, 1), 0.5});
  pairs.push_back({"N(0,1)|N(0,4)", gauss1(0, 1), gauss1(0, 4), 0.5 * (0.25 - 1 + std::log(4.0))});
  {
    const Gmm p = from_cov({1.0}, {{0, 0}}, {{1.0, 0.6, 0.6, 1.0}});
    const Gmm q = from_cov({1.0}, {{0.5, -0.3}}, {{2.0, -0.2, -0.2, 0.7}});
    pairs.push_back({"correlated 2-D Gaussians", p, q, gaussian_kl(p.mean(0), p.covariance(0), q.mean(0), q.covariance(0))});
  }
  pairs.push_back({"1-D bimodal|Gaussian", from_cov({0.3, 0.7}, {{-2}, {1}}, {{0.5}, {0.8}}), gauss1(0, 3), {}});
  pairs.push_back({"1-D bimodal|bimodal", from_cov({0.5, 0.5}, {{-1}, {1}}, {{0.2}, {0.2}}),
                   from_cov({0.4, 0.6}, {{-1.3}, {0.8}}, {{0.3}, {0.25}}), {}});
  pairs.push_back({"tailored theta=(0.5,1.5)|target", tailored_model(0.5, 1.5, 0.1), tailored_target(0.1), {}});
  pairs.push_back({"tailored target|theta=(1,1)", tailored_target(0.1), tailored_model(1.0, 1.0, 0.1), {}});
  {
    const Gmm lattice = from_cov({0.25, 0.25, 0.25, 0.25}, {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}},
                                 {{0.2, 0, 0, 0.2}, {0.2, 0, 0, 0.2}, {0.2, 0, 0, 0.2}, {0.2, 0, 0, 0.2}});
    pairs.push_back({"4-mode lattice|broad Gaussian", lattice, from_cov({1.0}, {{0, 0}}, {{2.0, 0, 0, 2.0}}), {}});
  }
  {
    const Gmm p = from_cov({0.2, 0.5, 0.3}, {{0, 1}, {1.5, -0.5}, {-1, -1}},
                           {{0.5, 0.1, 0.1, 0.4}, {0.3, -0.1, -0.1, 0.6}, {0.8, 0.3, 0.3, 0.5}});
    const Gmm q = from_cov({0.6, 0.4}, {{0.3, 0.2}, {-0.8, -0.6}}, {{1.0, 0.2, 0.2, 0.9}, {0.7, -0.2, -0.2, 0.6}});
    pairs.push_back({"3-component|2-component 2-D", p, q, {}});
    pairs.push_back({"3-component|its 30 deg rotation", p, linear_transform(p, rotation_matrix(M_PI / 6)), {}});
  }

  bool ok = true;
  std::string detail;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Pair& pr = pairs[i];
    const GridSpec grid = default_grid(pr.p, pr.q, pr.p.dim() == 1 ? 20001 : 1001);
    const double g = kl_grid(pr.p, pr.q, grid);
    Rng rng(derive_seed(8, i));
    const McEstimate mc = kl_mc(pr.p, pr.q, 1'000'000, rng);
    const double z = std::abs(mc.estimate - g) / mc.std_error;
    worst_z = std::max(worst_z, z);
    bool pair_ok = z <= 4.0;
    if (pr.exact) pair_ok = pair_ok && std::abs(g - *pr.exact) < 1e-6;
    ok = ok && pair_ok;
    detail += fmt::format("{}{}: grid {:.6f} mc {:.6f}+-{:.1e} z={:.2f}{}{}", detail.empty() ? "" : "; ", pr.name, g,
                          mc.estimate, mc.std_error, z, pr.exact ? fmt::format(" exact {:.6f}", *pr.exact) : "",
                          pair_ok ? "" : " MISMATCH");
  }
  return {ok, fmt::format("{} pairs, worst |mc - grid| = {:.2f} standard errors [{}]", pairs.size(), worst_z, detail)};
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out[e.path().filename().string()] = read_file(e.path().string());
  return out;
}

Outcome determinism() {
  // surface, training and evaluation configs covering joint, marginal,
  // conditional, rotation-averaged and noised tasks; first runs are reused
  // from the criteria above where available
  struct Case {
    std::string config;
    std::string first;
  };
  const std::vector<Case> cases{{"fig2.cfg", "fig2"}, {"fig5.cfg", "fig5"}, {"fig6.cfg", "fig6"},
                                {"fig7.cfg", "fig7"}, {"fig4_biglearn.cfg", "fig4_biglearn"},
                                {"fig4_joint.cfg", "fig4_joint"}};
  bool ok = true;
  std::string detail;
  auto compare = [&](const std::string& label, const fs::path& a, const fs::path& b) {
    const auto fa = directory_bytes(a);
    const auto fb = directory_bytes(b);
    const bool same = !fa.empty() && fa == fb;
    ok = ok && same;
    detail += fmt::format("{}{}: {} file(s) {}", detail.empty() ? "" : "; ", label, fa.size(),
                          same ? "identical" : "DIFFER");
  };
  for (const auto& c : cases) {
    const RunResult& first = cached(c.config, c.first);
    if (first.exit_code != 0) return fail_run(first);
    const RunResult again = run(c.config, c.first + "_threads8", 8);
    if (again.exit_code != 0) return fail_run(again);
    compare(c.config, first.dir, again.dir);
  }
  // the eval config reads ../runs/fig4_biglearn relative to itself; mirror
  // that layout inside the work directory
  const fs::path mirror = g_work / "eval_layout";
  fs::remove_all(mirror);
  fs::create_directories(mirror / "configs");
  fs::create_directories(mirror / "runs");
  fs::copy_file(kConfigs / "fig4_eval.cfg", mirror / "configs" / "fig4_eval.cfg");
  fs::copy(g_work / "fig4_biglearn", mirror / "runs" / "fig4_biglearn");
  const fs::path eval_cfg = mirror / "configs" / "fig4_eval.cfg";
  const RunResult e1 = run(eval_cfg, "fig4_eval", 1);
  const RunResult e8 = run(eval_cfg, "fig4_eval_threads8", 8);
  if (e1.exit_code != 0) return fail_run(e1);
  if (e8.exit_code != 0) return fail_run(e8);
  compare("fig4_eval.cfg", e1.dir, e8.dir);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  g_work = fs::temp_directory_path() / "biglearn_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      std::string item;
      while (std::getline(list, item, ',')) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: %s [--work-dir DIR] [--only N,M,...]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"joint surface has exactly the two true global optima", joint_global_optima},
      {"x2-marginal surface is flat", flat_second_marginal},
      {"joint surface is rotation invariant", rotation_invariance},
      {"rotated matchings share global optima and differ in local optima", cooperation_principle},
      {"noising ladder removes non-global minima", noising_ladder},
      {"pathwise gradients match finite differences", gradient_oracle},
      {"25-component exploration: big learning covers, joint-only collapses", exploration},
      {"Monte-Carlo and quadrature KL agree", estimator_cross_validation},
      {"outputs are bitwise reproducible across thread counts", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
