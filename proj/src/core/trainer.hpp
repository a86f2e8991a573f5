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

// Stochastic big-cooperative-learning loop: phase-scheduled task sampling,
// SGD on pathwise reverse-KL gradients, snapshots and mode coverage.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/divergence.hpp"
#include "core/error.hpp"
#include "core/gmm.hpp"
#include "core/tasks.hpp"

namespace biglearn {

struct InitSpec {
  int components = 25;
  int dim = 2;
  double mean_center = -5.0;
  double mean_var = 0.01;
  double scale_var = 0.05;  // isotropic initial covariance
  double positivity_floor = 1e-4;
};

ThetaModel init_model(const InitSpec& spec, Rng& rng);

struct Phase {
  std::string name;
  int start_iter = 0;
  TaskDistribution tasks;
};

struct TrainConfig {
  double lr = 0.1;
  int n_samples = 100;
  int total_iters = 6000;
  std::vector<Phase> phases;
  int inner_steps = 1;
  std::uint64_t seed = 0;
  int snapshot_every = 100;
  std::vector<int> snapshot_iters;  // extra snapshot points
  double grad_clip = 100.0;         // l2 norm; <= 0 disables
  double coverage_radius = 0.5;

  void validate(int dim) const;
  const Phase& phase_at(int iteration) const;
};

struct Snapshot {
  int iteration = 0;
  std::string phase;
  VectorXd theta;
  std::map<std::string, long> family_counts;     // tasks sampled so far
  std::map<std::string, double> running_losses;  // mean loss per family since the previous snapshot
  int coverage = 0;
};

struct TrainCounters {
  long outer_iterations = 0;
  long gradient_steps = 0;
  long samples_drawn = 0;
  std::map<std::string, long> tasks_per_family;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  ThetaModel final_model;
  TrainConfig config;
  TrainCounters counters;
};

// Thrown on a non-finite loss or gradient; carries the state at the failure.
class TrainingAbort : public Error {
 public:
  TrainingAbort(const std::string& what, Snapshot snapshot, std::string task)
      : Error(ErrorKind::kTrainingAbort, what), snapshot_(std::move(snapshot)), task_(std::move(task)) {}
  const Snapshot& snapshot() const { return snapshot_; }
  const std::string& task() const { return task_; }

 private:
  Snapshot snapshot_;
  std::string task_;
};

Trajectory train(ThetaModel model, const Gmm& target, const TrainConfig& cfg);

struct ModeCoverageReport {
  int iteration = 0;
  std::vector<bool> covered;  // per true component
  int count = 0;
  double radius = 0.0;
};

// True component j is covered iff some fitted mean lies strictly within `radius`.
ModeCoverageReport mode_coverage(const Gmm& model, const MatrixXd& true_means, double radius, int iteration = 0);
ModeCoverageReport mode_coverage(const MatrixXd& fitted_means, const MatrixXd& true_means, double radius,
                                 int iteration = 0);

MatrixXd means_matrix(const Gmm& g);  // K x D

struct LatticeSpec {
  int points_per_axis = 5;
  double spacing = 2.0;
  double component_var = 0.05;
};

// Equal-weight isotropic mixture on a centered square lattice.
Gmm lattice_gmm(const LatticeSpec& spec);

struct Benchmark {
  Gmm target;
  InitSpec init;
  TrainConfig config;
};

// 25 components on {-4,-2,0,2,4}^2 with variance 0.05, corner init N(-5, 0.01),
// 200 burn-in iterations of transformed marginals then joint/marginal at
// [0.1, 0.9], lr 0.1, 100 samples, 6000 iterations.
Benchmark make_25gmm_benchmark();

// Same schedule with the joint task only.
TrainConfig joint_only_config(const TrainConfig& base);

// Newline-delimited JSON: one header record, then one record per snapshot.
std::string trajectory_to_ndjson(const Trajectory& traj, const Gmm& target);

struct TrajectoryFile {
  int components = 0;
  int dim = 0;
  double positivity_floor = 1e-4;
  std::uint64_t seed = 0;
  double coverage_radius = 0.5;
  std::string target_text;  // may be empty
  std::vector<Snapshot> snapshots;
};

TrajectoryFile trajectory_from_ndjson(const std::string& text);

}  // namespace biglearn
