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

// Matching tasks: (transform, S, T, divergence) instances, the distributions
// they are sampled from, and their losses.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/divergence.hpp"
#include "core/gmm.hpp"
#include "core/random.hpp"

namespace biglearn {

struct Transform {
  enum class Kind {
    kIdentity,
    kRotation,          // 2-D only, angle in radians
    kOrthogonal,        // Haar-distributed matrix determined by `seed`
    kRandomOrthogonal,  // template placeholder; sample_task replaces it with kOrthogonal
    kNoising,           // convolution with N(0, noise_var I)
    kComposite,         // parts applied first to last
  };

  Kind kind = Kind::kIdentity;
  double angle = 0.0;
  std::uint64_t seed = 0;
  double noise_var = 0.0;
  std::vector<Transform> parts;

  static Transform identity() { return {}; }
  static Transform rotation(double radians);
  static Transform rotation_degrees(double degrees);
  static Transform orthogonal(std::uint64_t seed);
  static Transform random_orthogonal();
  static Transform noising(double noise_var);
  static Transform composite(std::vector<Transform> parts);

  bool is_concrete() const;  // no random placeholders
  std::string describe() const;
};

MatrixXd rotation_matrix(double radians);

// Haar orthogonal matrix from a seed: QR of a standard-normal matrix with a
// sign-corrected diagonal. At dim 2 it is a rotation by a uniform angle.
MatrixXd orthogonal_matrix(int dim, std::uint64_t seed);

Gmm apply_transform(const Gmm& g, const Transform& transform);

enum class Divergence { kReverseKl, kForwardKl, kJs };

std::string to_string(Divergence d);
std::optional<Divergence> parse_divergence(const std::string& name);

struct ConditioningPolicy {
  enum class Kind { kTargetMarginal, kUniformGrid, kFixed };
  Kind kind = Kind::kTargetMarginal;
  int count = 16;                // draws, or grid points per conditioning axis
  double lower = 0.0;            // uniform grid bounds
  double upper = 0.0;
  std::vector<double> values;    // fixed conditioning value (length |S|)

  static ConditioningPolicy target_marginal(int n);
  static ConditioningPolicy uniform_grid(double lower, double upper, int n);
  static ConditioningPolicy fixed(std::vector<double> values);
  std::string describe() const;
};

struct MatchingTask {
  std::string family;  // label used for per-family bookkeeping
  Transform transform;
  IndexSet s;
  IndexSet t;
  Divergence divergence = Divergence::kReverseKl;
  ConditioningPolicy conditioning;

  void validate(int dim) const;
  std::string describe() const;
};

// Law of |S|/D for mask-and-predict templates.
struct RatioLaw {
  enum class Kind { kFixed, kBeta };
  Kind kind = Kind::kBeta;
  double a = 0.5;
  double b = 3.0;
  double value = 0.5;

  double draw(Rng& rng) const;
  std::string describe() const;
};

struct TaskTemplate {
  enum class Pattern {
    kFixed,           // s and t as given
    kRandomMarginal,  // s empty, t a uniformly chosen single coordinate
    kMaskAndPredict,  // random s with |s|/D ~ ratio, t = complement
    kPermutation,     // random permutation z, uniform cut c: s = z[<c], t = {z[c]}
  };

  std::string family;
  Transform transform;
  Pattern pattern = Pattern::kFixed;
  IndexSet s;
  IndexSet t;
  Divergence divergence = Divergence::kReverseKl;
  ConditioningPolicy conditioning;
  RatioLaw ratio;
};

struct TaskDistribution {
  std::vector<TaskTemplate> templates;
  std::vector<double> probabilities;
  std::string phase;

  void validate(int dim) const;
};

MatchingTask sample_task(const TaskDistribution& dist, int dim, Rng& rng);

struct EstimatorSettings {
  int points_1d = 2001;
  int points_2d = 401;
  double bound_sigmas = kDefaultBoundSigmas;
  int mc_samples = 100000;  // used above 2 dimensions
  std::uint64_t seed = 0;   // conditioning draws and Monte-Carlo estimates
};

// Divergence between the model and target views of one task. Both sides are
// transformed; conditional tasks average over conditioning values drawn per
// the task's policy (from the transformed target marginal by default).
double task_loss(const MatchingTask& task, const Gmm& model, const Gmm& target, const EstimatorSettings& settings);

// Divergence between two distributions of equal dimension: grid quadrature up
// to 2-D, Monte Carlo above. `model_side` plays p_theta.
double divergence_value(Divergence divergence, const Gmm& model_side, const Gmm& target_side,
                        const EstimatorSettings& settings, Rng& rng);

// Differentiable pipeline of a task without conditioning.
LinearGaussianChannel pipeline_for(const MatchingTask& task, int dim);

struct PresetParams {
  int dim = 2;
  std::vector<double> noise_vars;         // noising_ladder
  RatioLaw source_ratio;                  // mask_and_predict
  std::optional<Divergence> divergence;   // overrides the preset default
};

// Named task distributions: joint, next_token, mask_and_predict, permutation,
// marginal_sweep, noising_ladder.
TaskDistribution preset(const std::string& name, const PresetParams& params);

}  // namespace biglearn
