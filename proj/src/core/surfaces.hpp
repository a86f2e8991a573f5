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

// Loss surfaces of the tailored two-component model over theta = (mu1, mu2).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/gmm.hpp"
#include "core/tasks.hpp"

namespace biglearn {

// Inclusive, evenly spaced axis: lower + (upper - lower) * i / (points - 1).
struct ThetaAxis {
  double lower = -3.0;
  double upper = 3.0;
  int points = 151;

  double at(int i) const { return lower + (upper - lower) * i / (points - 1); }
};

struct SurfaceSpec {
  std::string name = "surface";
  ThetaAxis mu1_axis;
  ThetaAxis mu2_axis;
  double sigma2 = 0.1;
  MatchingTask task;
  // Non-empty: the surface averages task_loss over these rotations (degrees),
  // each composed before the task's own transform.
  std::vector<double> family_rotations_deg;
  double data_noise_var = 0.0;  // convolution applied to model and target first
  EstimatorSettings settings;
  std::uint64_t seed = 0;

  void validate() const;
  std::string describe() const;
};

struct SurfaceGrid {
  std::vector<double> mu1;  // rows
  std::vector<double> mu2;  // columns
  MatrixXd loss;            // mu1.size() x mu2.size(); NaN at error cells
  std::vector<std::pair<int, int>> error_cells;
  std::vector<std::string> error_messages;
  std::map<std::string, std::string> metadata;

  bool complete() const { return error_cells.empty(); }
};

// Equal-weight components at (mu1, 0) and (mu2, 0) with covariance sigma2 * I.
Gmm tailored_model(double mu1, double mu2, double sigma2);

// The target of the tailored simulation, tailored_model(-1, 1, sigma2).
Gmm tailored_target(double sigma2);

double surface_point(const SurfaceSpec& spec, double mu1, double mu2);

SurfaceGrid sweep(const SurfaceSpec& spec, int threads = 1);

struct LocalMinimum {
  int row = 0;
  int col = 0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double loss = 0.0;
  bool is_global = false;
};

// Interior grid points strictly below all 8 neighbours; global when within
// `global_tol` of the grid minimum.
std::vector<LocalMinimum> find_local_minima(const SurfaceGrid& grid, double global_tol = 1e-9);

// Number of distinct non-global minima after identifying (mu1, mu2) with
// (mu2, mu1); both label orders describe the same model distribution.
int count_nonglobal_up_to_swap(const std::vector<LocalMinimum>& minima, double position_tol = 1e-9);

std::vector<SurfaceGrid> noising_ladder_sweep(const SurfaceSpec& base, const std::vector<double>& variances,
                                              int threads = 1);

// CSV: "# key=value" metadata lines, a header row "mu1\mu2,<mu2 axis>", then
// one row per mu1 value. 17 significant digits, '\n' line ends.
std::string to_csv(const SurfaceGrid& grid);
SurfaceGrid surface_from_csv(const std::string& text);

}  // namespace biglearn
