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

#include "core/config.hpp"
#include "core/error.hpp"

namespace biglearn {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,   // I/O and other unexpected errors
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitTrainingAbort = 4,
};

int exit_code_for(ErrorKind kind);

struct RunOptions {
  std::string config_path;
  std::string out_dir;                 // empty: runs/<config file stem>
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  int threads = 1;
};

struct RunReport {
  int exit_code = kExitOk;
  std::string out_dir;
  std::vector<std::string> files;  // written, relative to out_dir
  std::string message;             // human-readable outcome, one or more lines
};

// Runs the config's command. When `expected` is set and the config holds a
// different command section, the run fails with a config error. Errors are
// reported through the exit code and message, never thrown.
RunReport run_config(const RunOptions& options, std::optional<Command> expected = std::nullopt);

}  // namespace biglearn
