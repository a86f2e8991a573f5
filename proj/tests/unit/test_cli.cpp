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


#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(BIGLEARN_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biglearn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTrain = R"([train]
seed = 4
components = 3
total_iters = 20
snapshot_every = 10
snapshot_iters = none
lattice_points = 2
eval_points = 101
phases = main

[phase.main]
start = 0
tasks = joint 1

[task.joint]
)";

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli("--help").code, 0);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("bogus").code, 2);
  EXPECT_EQ(run_cli("train").code, 2);  // --config is required
  EXPECT_EQ(run_cli("train --config x.cfg --threads 0").code, 2);
  EXPECT_EQ(run_cli("train --config x.cfg --seed -3").code, 2);
}

TEST(Cli, MissingConfigFileIsAConfigError) {
  const Result r = run_cli("train --config /nonexistent/none.cfg");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("biglearn:"), std::string::npos);
}

TEST(Cli, ConfigErrorsNameTheLine) {
  const fs::path dir = scratch_dir("config_error");
  std::ofstream(dir / "bad.cfg") << "[surface]\nseed = 1\nsurfaces = j\nwhat = 1\n[task.j]\n";
  const Result r = run_cli("surface --config " + (dir / "bad.cfg").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("bad.cfg:4: [surface] unknown key 'what'"), std::string::npos) << r.output;
}

TEST(Cli, TrainWritesOutputsAndHonoursSeedOverride) {
  const fs::path dir = scratch_dir("train");
  std::ofstream(dir / "t.cfg") << kTrain;
  const std::string cfg = (dir / "t.cfg").string();
  const Result a = run_cli("train --config " + cfg + " --out " + (dir / "a").string());
  ASSERT_EQ(a.code, 0) << a.output;
  EXPECT_NE(a.output.find("output: " + (dir / "a").string()), std::string::npos) << a.output;
  const Result b = run_cli("train --config " + cfg + " --out " + (dir / "b").string());
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(dir / "a" / "trajectory.ndjson"), slurp(dir / "b" / "trajectory.ndjson"));
  const Result c = run_cli("train --config " + cfg + " --seed 5 --out " + (dir / "c").string());
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(slurp(dir / "a" / "trajectory.ndjson"), slurp(dir / "c" / "trajectory.ndjson"));
  EXPECT_NE(slurp(dir / "c" / "config.resolved.cfg").find("seed = 5"), std::string::npos);

  // the echoed config reproduces the run
  const Result d = run_cli("train --config " + (dir / "c" / "config.resolved.cfg").string() + " --out " +
                           (dir / "d").string());
  ASSERT_EQ(d.code, 0) << d.output;
  EXPECT_EQ(slurp(dir / "c" / "trajectory.ndjson"), slurp(dir / "d" / "trajectory.ndjson"));

  // subcommand must match the config's section
  EXPECT_EQ(run_cli("surface --config " + cfg + " --out " + (dir / "e").string()).code, 2);
}

TEST(Cli, DivergingTrainingExitsWithAbortCode) {
  const fs::path dir = scratch_dir("abort");
  std::string text = kTrain;
  text.replace(text.find("seed = 4"), 8, "seed = 4\nlr = 1e200\ngrad_clip = 0");
  std::ofstream(dir / "t.cfg") << text;
  const Result r = run_cli("train --config " + (dir / "t.cfg").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_TRUE(fs::exists(dir / "out" / "abort.json"));
}

TEST(Cli, SurfaceRunWritesCsvAndManifest) {
  const fs::path dir = scratch_dir("surface");
  std::ofstream(dir / "s.cfg") << "[surface]\nseed = 3\ntheta_points = 7\npoints_2d = 81\nsurfaces = joint\n"
                                  "[task.joint]\nt = all\n";
  const Result r = run_cli("surface --config " + (dir / "s.cfg").string() + " --out " + (dir / "out").string() +
                           " --threads 2");
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = slurp(dir / "out" / "joint.csv");
  EXPECT_NE(csv.find("mu1\\mu2,-3,"), std::string::npos) << csv.substr(0, 300);
  EXPECT_NE(slurp(dir / "out" / "manifest.json").find("\"local_minima\""), std::string::npos);
}

TEST(Cli, NumericalSweepFailureExitsWithThree) {
  const fs::path dir = scratch_dir("numerical");
  std::ofstream(dir / "s.cfg") << "[surface]\nseed = 3\nsigma2 = 1e-200\ntheta_points = 5\npoints_2d = 41\n"
                                  "surfaces = joint\n[task.joint]\nt = all\n";
  const Result r = run_cli("surface --config " + (dir / "s.cfg").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("first at theta=(0, 0)"), std::string::npos) << r.output;
  // the partial surface is still written, with NaN at the failing cells
  EXPECT_NE(slurp(dir / "out" / "joint.csv").find("nan"), std::string::npos);
}

TEST(Cli, MalformedTrajectoryIsAConfigError) {
  const fs::path dir = scratch_dir("bad_trajectory");
  std::ofstream(dir / "t.ndjson") << "{\"type\":\"header\"}\n";
  std::ofstream(dir / "e.cfg") << "[eval]\nseed = 1\ntrajectory = t.ndjson\n";
  const Result r = run_cli("eval --config " + (dir / "e.cfg").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("t.ndjson"), std::string::npos) << r.output;
}

TEST(Cli, EvalIsIdempotent) {
  const fs::path dir = scratch_dir("eval");
  std::ofstream(dir / "t.cfg") << kTrain;
  ASSERT_EQ(run_cli("train --config " + (dir / "t.cfg").string() + " --out " + (dir / "train").string()).code, 0);
  std::ofstream(dir / "e.cfg") << "[eval]\nseed = 2\ntrajectory = train/trajectory.ndjson\neval_points = 101\n";
  const std::string cmd = "eval --config " + (dir / "e.cfg").string() + " --out ";
  ASSERT_EQ(run_cli(cmd + (dir / "e1").string()).code, 0);
  ASSERT_EQ(run_cli(cmd + (dir / "e2").string()).code, 0);
  EXPECT_EQ(slurp(dir / "e1" / "eval.csv"), slurp(dir / "e2" / "eval.csv"));
}

TEST(Cli, EvalOfAPerfectFitIsAtTheNoiseFloor) {
  const fs::path dir = scratch_dir("perfect");
  // one standard normal component; 0.5411666523385311 maps to a unit scale
  const std::string target =
      "{\"dim\":2,\"weights\":[1],\"means\":[[0,0]],\"scales\":[[1,0,1]]}";
  std::ofstream(dir / "t.ndjson")
      << "{\"type\":\"header\",\"components\":1,\"dim\":2,\"positivity_floor\":0.0001,\"seed\":1,"
         "\"coverage_radius\":0.5,\"target\":" << target << "}\n"
      << "{\"type\":\"snapshot\",\"iteration\":0,\"phase\":\"p\",\"theta\":[0,0,0.5411666523385311,0,"
         "0.5411666523385311],\"family_counts\":{},\"running_losses\":{},\"coverage\":1}\n";
  std::ofstream(dir / "e.cfg") << "[eval]\nseed = 1\ntrajectory = t.ndjson\neval_points = 201\n";
  const Result r = run_cli("eval --config " + (dir / "e.cfg").string() + " --out " + (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::istringstream csv(slurp(dir / "out" / "eval.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  const auto first = row.find(',');
  const auto second = row.find(',', first + 1);
  EXPECT_EQ(row.substr(0, first), "0");
  EXPECT_LT(std::abs(std::stod(row.substr(first + 1, second - first - 1))), 1e-12) << row;
  EXPECT_EQ(row.substr(second + 1), "1");
}

}  // namespace
