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


#include "core/commands.hpp"

#include <filesystem>
#include <set>

#include <fmt/format.h>

#include "core/surfaces.hpp"
#include "core/text_io.hpp"
#include "core/trainer.hpp"

namespace biglearn {
namespace {

namespace fs = std::filesystem;

class Output {
 public:
  explicit Output(RunReport& report) : report_(report) {}

  void write(const std::string& name, const std::string& contents) {
    write_file((fs::path(report_.out_dir) / name).string(), contents);
    report_.files.push_back(name);
  }

 private:
  RunReport& report_;
};

std::string minima_json(const std::vector<LocalMinimum>& minima) {
  std::string out = "[";
  for (std::size_t i = 0; i < minima.size(); ++i) {
    const auto& m = minima[i];
    out += fmt::format("{}{{\"mu1\":{},\"mu2\":{},\"loss\":{},\"global\":{}}}", i ? "," : "", format_double(m.mu1),
                       format_double(m.mu2), format_double(m.loss), m.is_global ? "true" : "false");
  }
  return out + "]";
}

void run_surface(const RunConfig& cfg, const RunOptions& opt, RunReport& report) {
  Output out(report);
  std::string entries;
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < cfg.surfaces.size(); ++i) {
    const SurfaceJob& job = cfg.surfaces[i];
    const SurfaceGrid grid = sweep(job.spec, opt.threads);
    out.write(job.file, to_csv(grid));
    std::string minima = "null";
    if (grid.complete()) {
      minima = minima_json(find_local_minima(grid));
    } else {
      // the message already names the theta point
      failures.push_back(fmt::format("{}: {} error cell(s); first at {}", job.file, grid.error_cells.size(),
                                     grid.error_messages.front()));
    }
    entries += fmt::format("{}{{\"file\":{},\"name\":{},\"task\":{},\"error_cells\":{},\"local_minima\":{}}}",
                           i ? "," : "", json_string(job.file), json_string(job.spec.name),
                           json_string(job.spec.describe()), grid.error_cells.size(), minima);
  }
  out.write("manifest.json", fmt::format("{{\"command\":\"surface\",\"seed\":{},\"config\":\"config.resolved.cfg\","
                                         "\"surfaces\":[{}]}}\n",
                                         cfg.seed, entries));
  if (!failures.empty()) {
    report.exit_code = kExitNumerical;
    report.message = "numerical failure in sweep\n";
    for (const auto& f : failures) report.message += f + "\n";
  } else {
    report.message = fmt::format("{} surface(s) written\n", cfg.surfaces.size());
  }
}

std::string coverage_json(const ModeCoverageReport& rep) {
  std::string covered = "[";
  for (std::size_t j = 0; j < rep.covered.size(); ++j) covered += std::string(j ? "," : "") + (rep.covered[j] ? "true" : "false");
  covered += "]";
  return fmt::format("{{\"iteration\":{},\"radius\":{},\"count\":{},\"components\":{},\"covered\":{}}}\n", rep.iteration,
                     format_double(rep.radius), rep.count, rep.covered.size(), covered);
}

double joint_kl(const Gmm& model, const Gmm& target, int points, std::uint64_t seed) {
  EstimatorSettings est;
  est.points_1d = std::max(points, est.points_1d);
  est.points_2d = points;
  est.seed = seed;
  Rng rng(seed);
  return divergence_value(Divergence::kReverseKl, model, target, est, rng);
}

void run_train(const RunConfig& cfg, RunReport& report) {
  Output out(report);
  const TrainJob& job = *cfg.train;
  Rng init_rng(derive_seed(cfg.seed, 1));
  const ThetaModel model = init_model(job.init, init_rng);
  Trajectory traj{{}, model, job.config, {}};
  try {
    traj = train(model, *job.target, job.config);
  } catch (const TrainingAbort& abort) {
    const Snapshot& s = abort.snapshot();
    out.write("abort.json", fmt::format("{{\"message\":{},\"iteration\":{},\"phase\":{},\"task\":{},\"theta\":{}}}\n",
                                        json_string(abort.what()), s.iteration, json_string(s.phase),
                                        json_string(abort.task()), json_array(s.theta)));
    report.exit_code = kExitTrainingAbort;
    report.message = fmt::format("training aborted: {}\n", abort.what());
    return;
  }
  out.write("trajectory.ndjson", trajectory_to_ndjson(traj, *job.target));
  const Gmm final_model = traj.final_model.materialize();
  const ModeCoverageReport cov =
      mode_coverage(final_model, means_matrix(*job.target), job.config.coverage_radius, job.config.total_iters);
  out.write("coverage.json", coverage_json(cov));
  const double kl = joint_kl(final_model, *job.target, job.eval_points, derive_seed(cfg.seed, 2));
  std::string families = "{";
  bool first = true;
  for (const auto& [name, count] : traj.counters.tasks_per_family) {
    families += fmt::format("{}{}:{}", first ? "" : ",", json_string(name), count);
    first = false;
  }
  families += "}";
  out.write("summary.json",
            fmt::format("{{\"seed\":{},\"iterations\":{},\"gradient_steps\":{},\"samples_drawn\":{},"
                        "\"final_joint_kl\":{},\"coverage\":{},\"components\":{},\"coverage_radius\":{},"
                        "\"tasks_per_family\":{}}}\n",
                        cfg.seed, traj.counters.outer_iterations, traj.counters.gradient_steps,
                        traj.counters.samples_drawn, format_double(kl), cov.count, cov.covered.size(),
                        format_double(cov.radius), families));
  report.message = fmt::format("final coverage {}/{}, final joint KL {}\n", cov.count, cov.covered.size(), format_double(kl));
}

void run_eval(const RunConfig& cfg, RunReport& report) {
  Output out(report);
  const EvalJob& job = *cfg.eval;
  TrajectoryFile tf;
  try {
    tf = trajectory_from_ndjson(read_file(job.trajectory_path));
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, fmt::format("{}: {}", job.trajectory_path, e.what()));
  }
  std::optional<Gmm> target = job.target;
  if (!target) {
    if (tf.target_text.empty()) fail(ErrorKind::kConfig, job.trajectory_path + ": trajectory has no target; set target = file PATH");
    target = gmm_from_text(tf.target_text);
  }
  if (target->dim() != tf.dim)
    fail(ErrorKind::kConfig, fmt::format("target dim {} does not match trajectory dim {}", target->dim(), tf.dim));
  const double radius = job.coverage_radius > 0.0 ? job.coverage_radius : tf.coverage_radius;
  const MatrixXd true_means = means_matrix(*target);
  std::string csv = "iteration,kl,coverage\n";
  for (const Snapshot& s : tf.snapshots) {
    const Gmm model = ThetaModel(tf.components, tf.dim, s.theta, PositivityMap{tf.positivity_floor}).materialize();
    const double kl = joint_kl(model, *target, job.eval_points, derive_seed(cfg.seed, s.iteration));
    const int count = mode_coverage(model, true_means, radius, s.iteration).count;
    csv += fmt::format("{},{},{}\n", s.iteration, format_double(kl), count);
  }
  out.write("eval.csv", csv);
  report.message = fmt::format("{} snapshot(s) evaluated\n", tf.snapshots.size());
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kUnsupported: return kExitConfig;
    case ErrorKind::kNumerical: return kExitNumerical;
    case ErrorKind::kTrainingAbort: return kExitTrainingAbort;
    case ErrorKind::kIo: return kExitFailure;
  }
  return kExitFailure;
}

RunReport run_config(const RunOptions& options, std::optional<Command> expected) {
  RunReport report;
  try {
    if (options.threads < 1) fail(ErrorKind::kConfig, "threads must be at least 1");
    const RunConfig cfg = load_config(options.config_path, options.seed);
    if (expected && *expected != cfg.command)
      fail(ErrorKind::kConfig, fmt::format("{}: config is a [{}] config, not [{}]", options.config_path,
                                           to_string(cfg.command), to_string(*expected)));
    report.out_dir = options.out_dir.empty() ? (fs::path("runs") / fs::path(options.config_path).stem()).string()
                                             : options.out_dir;
    std::error_code ec;
    fs::create_directories(report.out_dir, ec);
    if (ec) fail(ErrorKind::kIo, fmt::format("cannot create output directory '{}': {}", report.out_dir, ec.message()));
    Output(report).write("config.resolved.cfg", to_ini(cfg.resolved));
    switch (cfg.command) {
      case Command::kSurface: run_surface(cfg, options, report); break;
      case Command::kTrain: run_train(cfg, report); break;
      case Command::kEval: run_eval(cfg, report); break;
    }
  } catch (const Error& e) {
    report.exit_code = exit_code_for(e.kind());
    report.message = std::string(e.what()) + "\n";
  } catch (const std::exception& e) {
    report.exit_code = kExitFailure;
    report.message = std::string("unexpected error: ") + e.what() + "\n";
  }
  return report;
}

}  // namespace biglearn
