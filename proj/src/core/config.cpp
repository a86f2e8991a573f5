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


#include "core/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "core/error.hpp"
#include "core/text_io.hpp"

namespace biglearn {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

// Value parsers throw plain messages; the reader attaches source and line.
struct BadValue {
  std::string message;
};

double parse_real(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) throw BadValue{"'" + s + "' is not a finite number"};
  return v;
}

long long parse_integer(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) throw BadValue{"'" + s + "' is not an integer"};
  return v;
}

std::uint64_t parse_seed(const std::string& s) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) throw BadValue{"'" + s + "' is not an unsigned 64-bit integer"};
  return v;
}

int parse_count(const std::string& s, int min) {
  const long long v = parse_integer(s);
  if (v < min || v > 1'000'000'000) throw BadValue{fmt::format("{} is out of range (minimum {})", v, min)};
  return static_cast<int>(v);
}

double parse_positive(const std::string& s) {
  const double v = parse_real(s);
  if (v <= 0.0) throw BadValue{fmt::format("{} must be positive", s)};
  return v;
}

double parse_nonnegative(const std::string& s) {
  const double v = parse_real(s);
  if (v < 0.0) throw BadValue{fmt::format("{} must be nonnegative", s)};
  return v;
}

bool is_none(const std::string& s) { return s.empty() || s == "none"; }

std::vector<double> parse_reals(const std::string& s) {
  std::vector<double> out;
  if (is_none(s)) return out;
  for (const auto& item : split(s, ',')) out.push_back(parse_real(item));
  return out;
}

std::vector<std::string> parse_names(const std::string& s) {
  std::vector<std::string> out;
  if (is_none(s)) return out;
  for (const auto& item : split(s, ',')) {
    if (!valid_name(item)) throw BadValue{"'" + item + "' is not a valid name (letters, digits, '_' or '-')"};
    out.push_back(item);
  }
  return out;
}

// "all" depends on the dimension, so it is kept symbolic until then.
struct IndexSpec {
  bool all = false;
  std::vector<int> indices;

  IndexSet resolve(int dim) const { return all ? IndexSet::range(0, dim) : IndexSet(indices); }
};

IndexSpec parse_indices(const std::string& s) {
  if (s == "all") return {true, {}};
  IndexSpec spec;
  if (is_none(s)) return spec;
  for (const auto& item : split(s, ',')) {
    const long long v = parse_integer(item);
    if (v < 0 || v > 1'000'000) throw BadValue{fmt::format("index {} is out of range", v)};
    spec.indices.push_back(static_cast<int>(v));
  }
  std::vector<int> sorted = spec.indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw BadValue{"indices must be distinct"};
  return spec;
}

Transform parse_single_transform(const std::string& s) {
  const auto w = words(s);
  if (w.empty()) throw BadValue{"empty transform"};
  const std::string& kind = w[0];
  auto arity = [&](std::size_t n) {
    if (w.size() != n + 1) throw BadValue{fmt::format("transform '{}' takes {} argument(s)", kind, n)};
  };
  if (kind == "identity") {
    arity(0);
    return Transform::identity();
  }
  if (kind == "rotation") {
    arity(1);
    return Transform::rotation_degrees(parse_real(w[1]));
  }
  if (kind == "orthogonal") {
    arity(1);
    return Transform::orthogonal(parse_seed(w[1]));
  }
  if (kind == "random_orthogonal") {
    arity(0);
    return Transform::random_orthogonal();
  }
  if (kind == "noising") {
    arity(1);
    return Transform::noising(parse_nonnegative(w[1]));
  }
  throw BadValue{"unknown transform '" + kind + "' (identity, rotation DEG, orthogonal SEED, random_orthogonal, noising VAR)"};
}

Transform parse_transform(const std::string& s) {
  std::vector<Transform> parts;
  for (const auto& item : split(s, '+')) parts.push_back(parse_single_transform(item));
  return parts.size() == 1 ? parts.front() : Transform::composite(std::move(parts));
}

Divergence parse_divergence_value(const std::string& s) {
  if (auto d = parse_divergence(s)) return *d;
  throw BadValue{"unknown divergence '" + s + "' (reverse_kl, forward_kl, js)"};
}

ConditioningPolicy parse_conditioning(const std::string& s) {
  const auto w = words(s);
  if (w.empty()) throw BadValue{"empty conditioning policy"};
  if (w[0] == "target_marginal" && w.size() == 2) return ConditioningPolicy::target_marginal(parse_count(w[1], 1));
  if (w[0] == "uniform_grid" && w.size() == 4) {
    const double lo = parse_real(w[1]);
    const double hi = parse_real(w[2]);
    if (!(lo < hi)) throw BadValue{"uniform_grid needs lower < upper"};
    return ConditioningPolicy::uniform_grid(lo, hi, parse_count(w[3], 1));
  }
  if (w[0] == "fixed" && w.size() >= 2) {
    std::vector<double> v;
    for (std::size_t i = 1; i < w.size(); ++i) v.push_back(parse_real(w[i]));
    return ConditioningPolicy::fixed(std::move(v));
  }
  throw BadValue{"conditioning must be 'target_marginal N', 'uniform_grid LO HI N' or 'fixed V...'"};
}

std::vector<double> parse_rotations(const std::string& s) {
  const auto w = words(s);
  if (w.size() == 2 && w[0] == "uniform") {
    const int n = parse_count(w[1], 1);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = 180.0 * i / n;
    return out;
  }
  return parse_reals(s);
}

TaskTemplate::Pattern parse_pattern(const std::string& s) {
  if (s == "fixed") return TaskTemplate::Pattern::kFixed;
  if (s == "random_marginal") return TaskTemplate::Pattern::kRandomMarginal;
  if (s == "mask_and_predict") return TaskTemplate::Pattern::kMaskAndPredict;
  if (s == "permutation") return TaskTemplate::Pattern::kPermutation;
  throw BadValue{"unknown pattern '" + s + "' (fixed, random_marginal, mask_and_predict, permutation)"};
}

RatioLaw parse_ratio(const std::string& s) {
  const auto w = words(s);
  RatioLaw law;
  if (w.size() == 3 && w[0] == "beta") {
    law.kind = RatioLaw::Kind::kBeta;
    law.a = parse_positive(w[1]);
    law.b = parse_positive(w[2]);
    return law;
  }
  if (w.size() == 2 && w[0] == "fixed") {
    law.kind = RatioLaw::Kind::kFixed;
    law.value = parse_real(w[1]);
    if (law.value < 0.0 || law.value > 1.0) throw BadValue{"fixed ratio must lie in [0, 1]"};
    return law;
  }
  throw BadValue{"ratio must be 'beta A B' or 'fixed R'"};
}

std::vector<std::pair<std::string, double>> parse_weighted(const std::string& s) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& item : split(s, ',')) {
    const auto w = words(item);
    if (w.size() != 2 || !valid_name(w[0])) throw BadValue{"expected 'NAME PROBABILITY' items separated by commas"};
    out.emplace_back(w[0], parse_nonnegative(w[1]));
  }
  if (out.empty()) throw BadValue{"no tasks listed"};
  return out;
}

// Reads one section against a schema: every read records the resolved value,
// and finish() rejects keys that were never read.
class SectionReader {
 public:
  SectionReader(const IniDocument& doc, const IniSection& section)
      : doc_(doc), section_(section), out_{section.name, section.line, {}} {}

  [[noreturn]] void error(int line, const std::string& message) const {
    fail(ErrorKind::kConfig, fmt::format("{}:{}: {}", doc_.source, line, message));
  }

  bool has(const std::string& key) const { return section_.find(key) != nullptr; }

  int line_of(const std::string& key) const {
    const IniEntry* e = section_.find(key);
    return e ? e->line : section_.line;
  }

  // Value of `key`, falling back to `fallback` when absent. The resolved
  // text (possibly rewritten by `echo`) goes into the output section.
  template <typename Parse>
  auto get(const std::string& key, const std::string& fallback, Parse parse,
           std::function<std::string(const std::string&)> echo = {}) {
    used_.insert(key);
    const IniEntry* e = section_.find(key);
    const std::string text = e ? e->value : fallback;
    try {
      auto value = parse(text);
      out_.entries.push_back({key, echo ? echo(text) : text, e ? e->line : 0});
      return value;
    } catch (const BadValue& bad) {
      error(e ? e->line : section_.line, fmt::format("[{}] {}: {}", section_.name, key, bad.message));
    }
  }

  template <typename Parse>
  auto required(const std::string& key, Parse parse, std::function<std::string(const std::string&)> echo = {}) {
    if (!has(key)) error(section_.line, fmt::format("[{}] missing required key '{}'", section_.name, key));
    return get(key, "", parse, std::move(echo));
  }

  // Overrides a value after the fact (command-line seed).
  void set(const std::string& key, const std::string& value) {
    for (auto& e : out_.entries)
      if (e.key == key) e.value = value;
  }

  IniSection finish() const {
    for (const auto& e : section_.entries)
      if (!used_.contains(e.key)) error(e.line, fmt::format("[{}] unknown key '{}'", section_.name, e.key));
    return out_;
  }

 private:
  const IniDocument& doc_;
  const IniSection& section_;
  IniSection out_;
  std::set<std::string> used_;
};

std::string absolute_path(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base_dir) / path;
  return fs::weakly_canonical(path).string();
}

struct TaskSection {
  TaskTemplate tmpl;
  IndexSpec s;
  IndexSpec t;
  std::vector<double> rotations;
  int line = 0;
};

class Resolver {
 public:
  Resolver(const IniDocument& doc, std::string base_dir) : doc_(doc), base_dir_(std::move(base_dir)) {}

  [[noreturn]] void error(int line, const std::string& message) const {
    fail(ErrorKind::kConfig, fmt::format("{}:{}: {}", doc_.source, line, message));
  }

  RunConfig run(std::optional<std::uint64_t> seed_override) {
    const IniSection* command_section = nullptr;
    for (const auto& sec : doc_.sections) {
      if (sec.name == "surface" || sec.name == "train" || sec.name == "eval") {
        if (command_section)
          error(sec.line, fmt::format("more than one command section ([{}] and [{}])", command_section->name, sec.name));
        command_section = &sec;
      } else if (sec.name.rfind("task.", 0) != 0 && sec.name.rfind("phase.", 0) != 0) {
        error(sec.line, fmt::format("unknown section [{}]", sec.name));
      }
    }
    if (!command_section) error(1, "no command section; expected one of [surface], [train], [eval]");

    RunConfig cfg;
    SectionReader reader(doc_, *command_section);
    cfg.seed = reader.required("seed", parse_seed);
    if (seed_override) {
      cfg.seed = *seed_override;
      reader.set("seed", std::to_string(cfg.seed));
    }
    if (command_section->name == "surface") {
      cfg.command = Command::kSurface;
      read_surface(reader, cfg);
    } else if (command_section->name == "train") {
      cfg.command = Command::kTrain;
      read_train(reader, cfg);
    } else {
      cfg.command = Command::kEval;
      read_eval(reader, cfg);
    }
    cfg.resolved.source = doc_.source;
    cfg.resolved.sections.push_back(reader.finish());
    for (const auto& sec : doc_.sections) {
      if (&sec == command_section) continue;
      auto it = resolved_.find(sec.name);
      if (it == resolved_.end()) error(sec.line, fmt::format("section [{}] is not used by [{}]", sec.name, command_section->name));
      cfg.resolved.sections.push_back(it->second);
    }
    return cfg;
  }

 private:
  const IniSection& section(const std::string& name, int ref_line) const {
    const IniSection* sec = doc_.find(name);
    if (!sec) error(ref_line, fmt::format("section [{}] is referenced but not defined", name));
    return *sec;
  }

  const TaskSection& task(const std::string& name, int ref_line) {
    if (auto it = tasks_.find(name); it != tasks_.end()) return it->second;
    const IniSection& sec = section("task." + name, ref_line);
    SectionReader r(doc_, sec);
    TaskSection ts;
    ts.line = sec.line;
    ts.tmpl.family = r.get("family", name, [](const std::string& s) {
      if (!valid_name(s)) throw BadValue{"'" + s + "' is not a valid name"};
      return s;
    });
    ts.tmpl.transform = r.get("transform", "identity", parse_transform);
    ts.tmpl.pattern = r.get("pattern", "fixed", parse_pattern);
    ts.s = r.get("s", "none", parse_indices);
    ts.t = r.get("t", "all", parse_indices);
    ts.tmpl.divergence = r.get("divergence", "reverse_kl", parse_divergence_value);
    ts.tmpl.conditioning = r.get("conditioning", "target_marginal 16", parse_conditioning);
    ts.tmpl.ratio = r.get("ratio", "beta 0.5 3", parse_ratio);
    ts.rotations = r.get("rotations", "none", parse_rotations);
    resolved_[sec.name] = r.finish();
    return tasks_.emplace(name, std::move(ts)).first->second;
  }

  void read_surface(SectionReader& r, RunConfig& cfg) {
    const double sigma2 = r.get("sigma2", "0.1", parse_positive);
    ThetaAxis axis;
    axis.lower = r.get("theta_lower", "-3", parse_real);
    axis.upper = r.get("theta_upper", "3", parse_real);
    axis.points = r.get("theta_points", "151", [](const std::string& s) { return parse_count(s, 3); });
    if (!(axis.lower < axis.upper)) r.error(r.line_of("theta_upper"), "[surface] theta_lower must be below theta_upper");
    EstimatorSettings est;
    est.points_1d = r.get("points_1d", "2001", [](const std::string& s) { return parse_count(s, 3); });
    est.points_2d = r.get("points_2d", "401", [](const std::string& s) { return parse_count(s, 3); });
    est.bound_sigmas = r.get("bound_sigmas", "8", parse_positive);
    est.mc_samples = r.get("mc_samples", "100000", [](const std::string& s) { return parse_count(s, 2); });
    const double noise = r.get("data_noise_var", "0", parse_nonnegative);
    const std::vector<double> ladder = r.get("noise_ladder", "none", [](const std::string& s) {
      auto v = parse_reals(s);
      for (double x : v)
        if (x < 0.0) throw BadValue{"variances must be nonnegative"};
      if (!std::is_sorted(v.begin(), v.end())) throw BadValue{"variances must be ascending"};
      return v;
    });
    const int list_line = r.line_of("surfaces");
    const auto names = r.required("surfaces", [](const std::string& s) {
      auto v = parse_names(s);
      if (v.empty()) throw BadValue{"at least one surface is required"};
      return v;
    });
    if (!ladder.empty() && noise != 0.0)
      r.error(r.line_of("noise_ladder"), "[surface] noise_ladder and data_noise_var are exclusive");

    std::set<std::string> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!seen.insert(names[i]).second) r.error(list_line, fmt::format("[surface] surface '{}' listed twice", names[i]));
      const TaskSection& ts = task(names[i], list_line);
      if (ts.tmpl.pattern != TaskTemplate::Pattern::kFixed)
        error(ts.line, fmt::format("[task.{}] surfaces need pattern = fixed", names[i]));
      if (!ts.tmpl.transform.is_concrete())
        error(ts.line, fmt::format("[task.{}] surfaces cannot use random_orthogonal; list rotations instead", names[i]));
      SurfaceSpec spec;
      spec.name = names[i];
      spec.mu1_axis = axis;
      spec.mu2_axis = axis;
      spec.sigma2 = sigma2;
      spec.task.family = ts.tmpl.family;
      spec.task.transform = ts.tmpl.transform;
      spec.task.s = ts.s.resolve(2);
      spec.task.t = ts.t.resolve(2);
      spec.task.divergence = ts.tmpl.divergence;
      spec.task.conditioning = ts.tmpl.conditioning;
      spec.family_rotations_deg = ts.rotations;
      spec.settings = est;
      spec.seed = derive_seed(cfg.seed, i);
      spec.data_noise_var = noise;
      try {
        spec.validate();
      } catch (const Error& e) {
        error(ts.line, fmt::format("[task.{}] {}", names[i], e.what()));
      }
      if (ladder.empty()) {
        cfg.surfaces.push_back({names[i] + ".csv", spec});
      } else {
        for (double v : ladder) {
          SurfaceSpec rung = spec;
          rung.data_noise_var = v;
          rung.name = fmt::format("{}_noise_{}", names[i], v);
          cfg.surfaces.push_back({rung.name + ".csv", rung});
        }
      }
    }
  }

  Gmm read_gmm_file(SectionReader& r, const std::string& key, const std::string& path) {
    try {
      return gmm_from_text(read_file(path));
    } catch (const Error& e) {
      r.error(r.line_of(key), fmt::format("{}: cannot load mixture from '{}': {}", key, path, e.what()));
    }
  }

  // "lattice" or "file PATH"; returns the path for files.
  std::optional<std::string> target_choice(SectionReader& r, const std::string& fallback, bool allow_trajectory) {
    const std::string base = base_dir_;
    return r.get(
        "target", fallback,
        [&](const std::string& s) -> std::optional<std::string> {
          const auto w = words(s);
          if (w.size() == 1 && (w[0] == "lattice" || (allow_trajectory && w[0] == "trajectory"))) return std::nullopt;
          if (w.size() == 2 && w[0] == "file") return absolute_path(base, w[1]);
          throw BadValue{allow_trajectory ? "target must be 'trajectory' or 'file PATH'" : "target must be 'lattice' or 'file PATH'"};
        },
        [&](const std::string& s) {
          const auto w = words(s);
          return w.size() == 2 ? "file " + absolute_path(base, w[1]) : s;
        });
  }

  void read_train(SectionReader& r, RunConfig& cfg) {
    TrainJob job;
    const auto target_path = target_choice(r, "lattice", false);
    LatticeSpec lattice;
    lattice.points_per_axis = r.get("lattice_points", "5", [](const std::string& s) { return parse_count(s, 1); });
    lattice.spacing = r.get("lattice_spacing", "2", parse_positive);
    lattice.component_var = r.get("lattice_var", "0.05", parse_positive);
    job.target = target_path ? read_gmm_file(r, "target", *target_path) : lattice_gmm(lattice);
    const int dim = job.target->dim();

    job.init.dim = dim;
    job.init.components = r.get("components", "25", [](const std::string& s) { return parse_count(s, 1); });
    job.init.mean_center = r.get("init_mean", "-5", parse_real);
    job.init.mean_var = r.get("init_var", "0.01", parse_nonnegative);
    job.init.scale_var = r.get("init_scale_var", "0.05", parse_positive);
    job.init.positivity_floor = r.get("positivity_floor", "0.0001", parse_positive);
    if (job.init.scale_var <= job.init.positivity_floor * job.init.positivity_floor)
      r.error(r.line_of("init_scale_var"), "[train] init_scale_var must exceed positivity_floor^2");

    TrainConfig& tc = job.config;
    tc.seed = cfg.seed;
    tc.lr = r.get("lr", "0.1", parse_positive);
    tc.n_samples = r.get("n_samples", "100", [](const std::string& s) { return parse_count(s, 1); });
    tc.total_iters = r.get("total_iters", "6000", [](const std::string& s) { return parse_count(s, 1); });
    tc.inner_steps = r.get("inner_steps", "1", [](const std::string& s) { return parse_count(s, 1); });
    tc.snapshot_every = r.get("snapshot_every", "100", [](const std::string& s) { return parse_count(s, 1); });
    tc.snapshot_iters = r.get("snapshot_iters", "200, 800, 1400, 6000", [](const std::string& s) {
      std::vector<int> out;
      if (is_none(s)) return out;
      for (const auto& item : split(s, ',')) out.push_back(parse_count(item, 1));
      return out;
    });
    tc.grad_clip = r.get("grad_clip", "100", parse_real);
    tc.coverage_radius = r.get("coverage_radius", "0.5", parse_positive);
    job.eval_points = r.get("eval_points", "401", [](const std::string& s) { return parse_count(s, 3); });

    const int phases_line = r.line_of("phases");
    const auto phase_names = r.required("phases", [](const std::string& s) {
      auto v = parse_names(s);
      if (v.empty()) throw BadValue{"at least one phase is required"};
      return v;
    });
    for (const auto& name : phase_names) tc.phases.push_back(read_phase(name, phases_line, dim));
    try {
      tc.validate(dim);
    } catch (const Error& e) {
      r.error(phases_line, fmt::format("[train] {}", e.what()));
    }
    cfg.train = std::move(job);
  }

  Phase read_phase(const std::string& name, int ref_line, int dim) {
    const IniSection& sec = section("phase." + name, ref_line);
    if (resolved_.contains(sec.name)) error(ref_line, fmt::format("phase '{}' listed twice", name));
    SectionReader r(doc_, sec);
    Phase phase;
    phase.name = name;
    phase.start_iter = r.required("start", [](const std::string& s) { return parse_count(s, 0); });
    const bool has_tasks = r.has("tasks");
    const bool has_preset = r.has("preset");
    if (has_tasks == has_preset) r.error(sec.line, fmt::format("[{}] needs exactly one of 'tasks' or 'preset'", sec.name));
    if (has_tasks) {
      const int line = r.line_of("tasks");
      const auto items = r.required("tasks", parse_weighted);
      for (const auto& [task_name, prob] : items) {
        const TaskSection& ts = task(task_name, line);
        if (!ts.rotations.empty())
          error(ts.line, fmt::format("[task.{}] rotations only apply to surfaces; use random_orthogonal", task_name));
        TaskTemplate tmpl = ts.tmpl;
        tmpl.s = ts.s.resolve(dim);
        tmpl.t = ts.t.resolve(dim);
        phase.tasks.templates.push_back(std::move(tmpl));
        phase.tasks.probabilities.push_back(prob);
      }
      phase.tasks.phase = name;
    } else {
      const std::string preset_name = r.required("preset", [](const std::string& s) { return s; });
      PresetParams params;
      params.dim = dim;
      params.noise_vars = r.get("noise_vars", "none", parse_reals);
      params.source_ratio = r.get("ratio", "beta 0.5 3", parse_ratio);
      const std::string div = r.get("divergence", "default", [](const std::string& s) {
        if (s != "default") parse_divergence_value(s);
        return s;
      });
      if (div != "default") params.divergence = parse_divergence_value(div);
      try {
        phase.tasks = preset(preset_name, params);
      } catch (const Error& e) {
        r.error(r.line_of("preset"), fmt::format("[{}] {}", sec.name, e.what()));
      }
      phase.tasks.phase = name;
    }
    try {
      phase.tasks.validate(dim);
    } catch (const Error& e) {
      r.error(sec.line, fmt::format("[{}] {}", sec.name, e.what()));
    }
    resolved_[sec.name] = r.finish();
    return phase;
  }

  void read_eval(SectionReader& r, RunConfig& cfg) {
    EvalJob job;
    const std::string base = base_dir_;
    job.trajectory_path = r.required(
        "trajectory", [&](const std::string& s) { return absolute_path(base, s); },
        [&](const std::string& s) { return absolute_path(base, s); });
    if (const auto path = target_choice(r, "trajectory", true)) job.target = read_gmm_file(r, "target", *path);
    job.coverage_radius = r.get("coverage_radius", "0", parse_nonnegative);
    job.eval_points = r.get("eval_points", "401", [](const std::string& s) { return parse_count(s, 3); });
    cfg.eval = std::move(job);
  }

  const IniDocument& doc_;
  std::string base_dir_;
  std::map<std::string, TaskSection> tasks_;
  std::map<std::string, IniSection> resolved_;
};

}  // namespace

const IniEntry* IniSection::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

const IniSection* IniDocument::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

IniDocument parse_ini(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source = source;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  auto error = [&](const std::string& msg) { fail(ErrorKind::kConfig, fmt::format("{}:{}: {}", source, line, msg)); };
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s[0] == '[') {
      if (s.back() != ']') error("unterminated section header");
      const std::string name = trim(std::string_view(s).substr(1, s.size() - 2));
      const auto dot = name.find('.');
      const bool ok = dot == std::string::npos ? valid_name(name)
                                                : valid_name(name.substr(0, dot)) && valid_name(name.substr(dot + 1));
      if (!ok) error("invalid section name '" + name + "'");
      if (doc.find(name)) error("duplicate section [" + name + "]");
      doc.sections.push_back({name, line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) error("expected 'key = value'");
    if (doc.sections.empty()) error("key outside of any section");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    std::string value = trim(std::string_view(s).substr(eq + 1));
    if (!valid_name(key)) error("invalid key '" + key + "'");
    // Trailing comments need whitespace before the marker.
    for (std::size_t i = 1; i < value.size(); ++i) {
      if ((value[i] == '#' || value[i] == ';') && std::isspace(static_cast<unsigned char>(value[i - 1]))) {
        value = trim(std::string_view(value).substr(0, i));
        break;
      }
    }
    IniSection& sec = doc.sections.back();
    if (sec.find(key)) error("duplicate key '" + key + "' in [" + sec.name + "]");
    sec.entries.push_back({key, value, line});
  }
  return doc;
}

std::string to_ini(const IniDocument& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.sections.size(); ++i) {
    if (i) out += "\n";
    out += "[" + doc.sections[i].name + "]\n";
    for (const auto& e : doc.sections[i].entries) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

std::string to_string(Command c) {
  switch (c) {
    case Command::kSurface: return "surface";
    case Command::kTrain: return "train";
    case Command::kEval: return "eval";
  }
  return "?";
}

RunConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir,
                       std::optional<std::uint64_t> seed_override) {
  const IniDocument doc = parse_ini(text, source);
  return Resolver(doc, base_dir).run(seed_override);
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  const fs::path p(path);
  const std::string dir = p.has_parent_path() ? p.parent_path().string() : std::string(".");
  return parse_config(text, path, dir, seed_override);
}

}  // namespace biglearn
