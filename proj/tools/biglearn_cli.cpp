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


#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "biglearn/biglearn.h"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_flags(CLI::App* cmd, Flags& flags, CLI::Option*& seed_opt) {
  cmd->add_option("--config", flags.config, "Run config file")->required();
  cmd->add_option("--out", flags.out, "Output directory (default runs/<config stem>)");
  seed_opt = cmd->add_option("--seed", flags.seed, "Override the config's seed");
  cmd->add_option("--threads", flags.threads, "Worker threads for surface sweeps")->check(CLI::PositiveNumber);
}

int run(bl_command command, const Flags& flags, bool has_seed) {
  bl_run_options opt{};
  opt.config_path = flags.config.c_str();
  opt.out_dir = flags.out.c_str();
  opt.has_seed = has_seed ? 1 : 0;
  opt.seed = flags.seed;
  opt.threads = flags.threads;
  const auto start = std::chrono::steady_clock::now();
  int exit_code = 1;
  const bl_status status = bl_run(&opt, command, &exit_code);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (status == BL_OK) {
    std::fputs(bl_last_run_message(), stdout);
    std::printf("output: %s (%.2f s)\n", bl_last_run_out_dir(), seconds);
  } else {
    std::fprintf(stderr, "biglearn: %s", bl_last_error());
    if (*bl_last_run_out_dir()) std::fprintf(stderr, "output: %s\n", bl_last_run_out_dir());
  }
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Big cooperative learning on Gaussian mixtures"};
  app.set_version_flag("--version", std::string(bl_version()));
  app.require_subcommand(1);

  Flags flags;
  CLI::Option* seed_opt = nullptr;
  CLI::App* surface = app.add_subcommand("surface", "Sweep loss surfaces over the tailored parameter grid");
  CLI::App* train = app.add_subcommand("train", "Train a mixture with a phased task schedule");
  CLI::App* eval = app.add_subcommand("eval", "Recompute joint KL and coverage for a saved trajectory");
  CLI::Option* seed_surface = nullptr;
  CLI::Option* seed_train = nullptr;
  CLI::Option* seed_eval = nullptr;
  add_flags(surface, flags, seed_surface);
  add_flags(train, flags, seed_train);
  add_flags(eval, flags, seed_eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (surface->parsed()) seed_opt = seed_surface;
  else if (train->parsed()) seed_opt = seed_train;
  else seed_opt = seed_eval;
  const bl_command command = surface->parsed() ? BL_COMMAND_SURFACE : train->parsed() ? BL_COMMAND_TRAIN : BL_COMMAND_EVAL;
  return run(command, flags, seed_opt->count() > 0);
}
