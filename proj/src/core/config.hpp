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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/gmm.hpp"
#include "core/surfaces.hpp"
#include "core/trainer.hpp"

namespace biglearn {

// Sectioned key-value text:
//
//   # comment            ; comment
//   [section]
//   key = value
//
// Keys are unique within a section and sections are unique by name.
struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(const std::string& key) const;
};

struct IniDocument {
  std::string source;  // used as the prefix of error messages
  std::vector<IniSection> sections;

  const IniSection* find(const std::string& name) const;
};

IniDocument parse_ini(const std::string& text, const std::string& source);
std::string to_ini(const IniDocument& doc);

enum class Command { kSurface, kTrain, kEval };

std::string to_string(Command c);

struct SurfaceJob {
  std::string file;  // output file name, relative to the run directory
  SurfaceSpec spec;
};

struct TrainJob {
  InitSpec init;
  TrainConfig config;
  std::optional<Gmm> target;
  int eval_points = 401;  // per-axis quadrature points for the final joint KL
};

struct EvalJob {
  std::string trajectory_path;  // absolute or relative to the working directory
  std::optional<Gmm> target;    // unset: use the target stored in the trajectory
  double coverage_radius = 0.0; // <= 0: use the trajectory's radius
  int eval_points = 401;
};

// A validated run: every key checked against the schema and every default
// written back into `resolved`, so to_ini(resolved) re-runs identically.
struct RunConfig {
  Command command = Command::kSurface;
  std::uint64_t seed = 0;
  IniDocument resolved;
  std::vector<SurfaceJob> surfaces;
  std::optional<TrainJob> train;
  std::optional<EvalJob> eval;
};

// Relative paths inside the config resolve against `base_dir`. Errors are
// ErrorKind::kConfig with "source:line: message" text.
RunConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace biglearn
