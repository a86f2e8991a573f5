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

#include "core/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/text_io.hpp"

namespace biglearn {

Gmm tailored_model(double mu1, double mu2, double sigma2) {
  require(sigma2 > 0.0, "tailored_model: sigma2 must be positive");
  std::vector<VectorXd> means(2, VectorXd::Zero(2));
  means[0][0] = mu1;
  means[1][0] = mu2;
  const MatrixXd scale = std::sqrt(sigma2) * MatrixXd::Identity(2, 2);
  return Gmm(VectorXd::Constant(2, 0.5), std::move(means), {scale, scale});
}

Gmm tailored_target(double sigma2) { return tailored_model(-1.0, 1.0, sigma2); }

void SurfaceSpec::validate() const {
  require(sigma2 > 0.0, "surface: sigma2 must be positive");
  for (const ThetaAxis* a : {&mu1_axis, &mu2_axis})
    require(a->points >= 3 && a->lower < a->upper, "surface: theta axes need lower < upper and >= 3 points");
  require(data_noise_var >= 0.0, "surface: noise variance must be nonnegative");
  task.validate(2);
}

std::string SurfaceSpec::describe() const {
  std::string out = task.describe();
  if (!family_rotations_deg.empty()) out += " averaged over rotations [" + format_list(family_rotations_deg, ",") + "]deg";
  if (data_noise_var > 0.0) out += " noise_var=" + format_double(data_noise_var);
  return out;
}

double surface_point(const SurfaceSpec& spec, double mu1, double mu2) {
  Gmm model = tailored_model(mu1, mu2, spec.sigma2);
  Gmm target = tailored_target(spec.sigma2);
  if (spec.data_noise_var > 0.0) {
    model = convolve_gaussian(model, spec.data_noise_var);
    target = convolve_gaussian(target, spec.data_noise_var);
  }
  EstimatorSettings settings = spec.settings;
  if (spec.family_rotations_deg.empty()) {
    settings.seed = derive_seed(spec.seed, 0);
    return task_loss(spec.task, model, target, settings);
  }
  double total = 0.0;
  for (std::size_t r = 0; r < spec.family_rotations_deg.size(); ++r) {
    MatchingTask member = spec.task;
    const Transform rot = Transform::rotation_degrees(spec.family_rotations_deg[r]);
    member.transform = spec.task.transform.kind == Transform::Kind::kIdentity
                           ? rot
                           : Transform::composite({rot, spec.task.transform});
    // conditioning draws depend on the member only, so every theta sees the same values
    settings.seed = derive_seed(spec.seed, r);
    total += task_loss(member, model, target, settings);
  }
  return total / static_cast<double>(spec.family_rotations_deg.size());
}

SurfaceGrid sweep(const SurfaceSpec& spec, int threads) {
  spec.validate();
  SurfaceGrid grid;
  const int rows = spec.mu1_axis.points;
  const int cols = spec.mu2_axis.points;
  for (int i = 0; i < rows; ++i) grid.mu1.push_back(spec.mu1_axis.at(i));
  for (int j = 0; j < cols; ++j) grid.mu2.push_back(spec.mu2_axis.at(j));
  grid.loss.resize(rows, cols);
  std::vector<std::vector<std::pair<int, std::string>>> row_errors(rows);

  parallel_for(rows, threads, [&](int i) {
    for (int j = 0; j < cols; ++j) {
      double v = std::numeric_limits<double>::quiet_NaN();
      std::string message;
      try {
        v = surface_point(spec, grid.mu1[i], grid.mu2[j]);
        if (!std::isfinite(v)) message = "non-finite loss " + format_double(v);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumerical) throw;
        message = e.what();
      }
      if (!message.empty()) {
        v = std::numeric_limits<double>::quiet_NaN();
        row_errors[i].emplace_back(j, message);
      }
      grid.loss(i, j) = v;
    }
  });
  for (int i = 0; i < rows; ++i)
    for (const auto& [j, msg] : row_errors[i]) {
      grid.error_cells.emplace_back(i, j);
      grid.error_messages.push_back(
          fmt::format("theta=({}, {}): {}", format_double(grid.mu1[i]), format_double(grid.mu2[j]), msg));
    }

  grid.metadata["name"] = spec.name;
  grid.metadata["task"] = spec.describe();
  grid.metadata["sigma2"] = format_double(spec.sigma2);
  grid.metadata["noise_var"] = format_double(spec.data_noise_var);
  grid.metadata["estimator"] = fmt::format("midpoint points_1d={} points_2d={} bound_sigmas={} mc_samples={}",
                                           spec.settings.points_1d, spec.settings.points_2d,
                                           format_double(spec.settings.bound_sigmas), spec.settings.mc_samples);
  grid.metadata["seed"] = std::to_string(spec.seed);
  return grid;
}

std::vector<LocalMinimum> find_local_minima(const SurfaceGrid& grid, double global_tol) {
  require(grid.complete(), "find_local_minima: surface has error cells");
  const auto rows = grid.loss.rows();
  const auto cols = grid.loss.cols();
  std::vector<LocalMinimum> out;
  if (rows < 3 || cols < 3) return out;
  const double gmin = grid.loss.minCoeff();
  for (Eigen::Index i = 1; i + 1 < rows; ++i)
    for (Eigen::Index j = 1; j + 1 < cols; ++j) {
      const double v = grid.loss(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (!(v < grid.loss(i + di, j + dj))) {
            is_min = false;
            break;
          }
        }
      if (is_min)
        out.push_back({static_cast<int>(i), static_cast<int>(j), grid.mu1[i], grid.mu2[j], v, v <= gmin + global_tol});
    }
  return out;
}

int count_nonglobal_up_to_swap(const std::vector<LocalMinimum>& minima, double position_tol) {
  std::vector<std::pair<double, double>> seen;
  for (const auto& m : minima) {
    if (m.is_global) continue;
    const std::pair<double, double> key{std::min(m.mu1, m.mu2), std::max(m.mu1, m.mu2)};
    const bool dup = std::any_of(seen.begin(), seen.end(), [&](const auto& s) {
      return std::abs(s.first - key.first) <= position_tol && std::abs(s.second - key.second) <= position_tol;
    });
    if (!dup) seen.push_back(key);
  }
  return static_cast<int>(seen.size());
}

std::vector<SurfaceGrid> noising_ladder_sweep(const SurfaceSpec& base, const std::vector<double>& variances,
                                              int threads) {
  for (std::size_t i = 0; i < variances.size(); ++i) {
    require(variances[i] >= 0.0, "noising ladder: variances must be nonnegative");
    if (i) require(variances[i] >= variances[i - 1], "noising ladder: variances must be ascending");
  }
  std::vector<SurfaceGrid> out;
  for (double v : variances) {
    SurfaceSpec spec = base;
    spec.data_noise_var = base.data_noise_var + v;
    out.push_back(sweep(spec, threads));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string to_csv(const SurfaceGrid& grid) {
  std::string out = "# format=biglearn-surface-1\n";
  for (const auto& [k, v] : grid.metadata) {
    std::string clean = v;
    std::replace(clean.begin(), clean.end(), '\n', ' ');
    out += "# " + k + "=" + clean + "\n";
  }
  out += fmt::format("# error_cells={}\n", grid.error_cells.size());
  out += "mu1\\mu2";
  for (double m : grid.mu2) out += "," + format_double(m);
  out += "\n";
  for (std::size_t i = 0; i < grid.mu1.size(); ++i) {
    out += format_double(grid.mu1[i]);
    for (std::size_t j = 0; j < grid.mu2.size(); ++j)
      out += "," + format_double(grid.loss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out += "\n";
  }
  return out;
}

namespace {

std::vector<double> parse_csv_numbers(const std::string& line, std::size_t skip_fields) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string field;
  std::size_t index = 0;
  while (std::getline(ss, field, ',')) {
    if (index++ < skip_fields) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      require(used == field.size(), "surface csv: trailing characters in '" + field + "'");
      out.push_back(v);
    } catch (const std::logic_error&) {
      if (field == "nan") out.push_back(std::numeric_limits<double>::quiet_NaN());
      else fail(ErrorKind::kInvalidArgument, "surface csv: bad number '" + field + "'");
    }
  }
  return out;
}

}  // namespace

SurfaceGrid surface_from_csv(const std::string& text) {
  SurfaceGrid grid;
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      require(eq != std::string::npos, "surface csv: metadata line without '='");
      const std::string key = line.substr(2, eq - 2);
      if (key != "error_cells" && key != "format") grid.metadata[key] = line.substr(eq + 1);
      continue;
    }
    if (!have_header) {
      require(line.rfind("mu1\\mu2,", 0) == 0, "surface csv: missing axis header row");
      grid.mu2 = parse_csv_numbers(line, 1);
      have_header = true;
      continue;
    }
    auto values = parse_csv_numbers(line, 0);
    require(values.size() == grid.mu2.size() + 1, "surface csv: row length does not match the header");
    grid.mu1.push_back(values.front());
    values.erase(values.begin());
    rows.push_back(std::move(values));
  }
  require(have_header && !rows.empty(), "surface csv: no data rows");
  grid.loss.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(grid.mu2.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < grid.mu2.size(); ++j) {
      grid.loss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      if (std::isnan(rows[i][j])) grid.error_cells.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  return grid;
}

}  // namespace biglearn
