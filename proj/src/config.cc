// Copyright 2026 The pushsim Authors
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

#include "pushsim/config.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pushsim/error.h"

namespace pushsim {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const auto* keys = new std::map<std::string, std::set<std::string>>{
      {"topology", {"kind", "n", "edges_file", "horizon"}},
      {"compression", {"kind", "a", "b", "float_width"}},
      {"privacy", {"epsilon", "delta", "clip_G", "c1", "c2", "enabled", "clip"}},
      {"problem",
       {"kind", "d", "J", "reg", "synth_seed", "hidden", "test_size",
        "separation", "csv"}},
      {"run",
       {"eta", "T", "algorithm", "seed", "overflow_guard",
        "allow_inadmissible_omega", "schedule"}},
      {"grid", {"epsilons", "compressors", "algorithms", "repeats", "out"}},
  };
  return *keys;
}

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> SplitList(std::string_view s) {
  std::vector<std::string> out;
  std::stringstream in{std::string(s)};
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ValidationError(key + ": expected a number, got '" + value + "'");
}

std::int64_t ToInt(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ValidationError(key + ": expected an integer, got '" + value + "'");
}

std::uint64_t ToUnsigned(const std::string& key, const std::string& value) {
  const std::int64_t v = ToInt(key, value);
  if (v < 0) throw ValidationError(key + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool ToBool(const std::string& key, std::string value) {
  std::transform(value.begin(), value.end(), value.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw ValidationError(key + ": expected a boolean, got '" + value + "'");
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

void Apply(ExperimentConfig& c, const std::string& section,
           const std::string& key, const std::string& value,
           const std::filesystem::path& base) {
  const std::string full = section + "." + key;
  if (section == "topology") {
    if (key == "kind") c.graph_kind = ParseGraphKind(value);
    else if (key == "n") c.n = static_cast<int>(ToInt(full, value));
    else if (key == "edges_file") c.edges_file = Resolve(base, value);
    else if (key == "horizon") c.horizon = static_cast<int>(ToInt(full, value));
  } else if (section == "compression") {
    if (key == "kind") c.compressor_kind = ParseCompressorKind(value);
    else if (key == "a") c.rand_fraction = ToDouble(full, value);
    else if (key == "b") c.gsgd_bits = static_cast<int>(ToInt(full, value));
    else if (key == "float_width") c.float_width = static_cast<int>(ToInt(full, value));
  } else if (section == "privacy") {
    if (key == "epsilon") c.privacy.epsilon = ToDouble(full, value);
    else if (key == "delta") c.privacy.delta = ToDouble(full, value);
    else if (key == "clip_G") c.privacy.clip_G = ToDouble(full, value);
    else if (key == "c1") c.privacy.c1 = ToDouble(full, value);
    else if (key == "c2") c.privacy.c2 = ToDouble(full, value);
    else if (key == "enabled") c.privacy.enabled = ToBool(full, value);
    else if (key == "clip") c.clip = ToBool(full, value);
  } else if (section == "problem") {
    if (key == "kind") c.problem.kind = ParseObjectiveKind(value);
    else if (key == "d") c.problem.d = static_cast<std::size_t>(ToUnsigned(full, value));
    else if (key == "J") c.problem.J = ToInt(full, value);
    else if (key == "reg") c.problem.reg = ToDouble(full, value);
    else if (key == "synth_seed") c.problem.synth_seed = ToUnsigned(full, value);
    else if (key == "hidden") c.problem.hidden = static_cast<std::size_t>(ToUnsigned(full, value));
    else if (key == "test_size") c.problem.test_size = static_cast<std::size_t>(ToUnsigned(full, value));
    else if (key == "separation") c.problem.separation = ToDouble(full, value);
    else if (key == "csv") c.problem.csv = Resolve(base, value);
  } else if (section == "run") {
    if (key == "eta") c.eta = ToDouble(full, value);
    else if (key == "T") c.T = ToInt(full, value);
    else if (key == "algorithm") c.algorithm = ParseAlgorithm(value);
    else if (key == "seed") c.seed = ToUnsigned(full, value);
    else if (key == "overflow_guard") c.overflow_guard = ToDouble(full, value);
    else if (key == "allow_inadmissible_omega") c.allow_inadmissible_omega = ToBool(full, value);
    else if (key == "schedule") {
      if (value == "fixed") c.schedule = ScheduleMode::kFixed;
      else if (value == "theory") c.schedule = ScheduleMode::kTheory;
      else throw ValidationError(full + ": expected 'fixed' or 'theory'");
    }
  } else if (section == "grid") {
    if (key == "epsilons") {
      c.grid.epsilons.clear();
      for (const auto& item : SplitList(value)) {
        c.grid.epsilons.push_back(ToDouble(full, item));
      }
    } else if (key == "compressors") {
      c.grid.compressors = SplitList(value);
      for (const auto& label : c.grid.compressors) {
        ParseCompressor(label, 1);  // syntax check; d is not known yet
      }
    } else if (key == "algorithms") {
      c.grid.algorithms.clear();
      for (const auto& item : SplitList(value)) {
        c.grid.algorithms.push_back(ParseAlgorithm(item));
      }
    } else if (key == "repeats") {
      c.grid.repeats = static_cast<int>(ToInt(full, value));
    } else if (key == "out") {
      c.grid.out_dir = Resolve(base, value);
    }
  }
}

}  // namespace

CompressorSpec ExperimentConfig::Compressor(std::size_t d) const {
  switch (compressor_kind) {
    case CompressorKind::kIdentity:
      return CompressorSpec::Identity(d, float_width);
    case CompressorKind::kRand:
      return CompressorSpec::Rand(rand_fraction, d, float_width);
    case CompressorKind::kGsgd:
      return CompressorSpec::Gsgd(gsgd_bits, d, float_width);
  }
  return CompressorSpec::Identity(d, float_width);
}

void ExperimentConfig::SetCompressor(std::string_view label) {
  const CompressorSpec spec = ParseCompressor(label, 1, float_width);
  compressor_kind = spec.kind;
  if (spec.kind == CompressorKind::kRand) rand_fraction = spec.a;
  if (spec.kind == CompressorKind::kGsgd) gsgd_bits = spec.b;
}

ExperimentConfig ParseConfig(std::string_view text,
                             const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  ExperimentConfig config;
  const auto& known = KnownKeys();
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end() || body.empty()) {
      throw ValidationError("config: unknown section '" + section + "'");
    }
    for (const auto& [key, node] : body) {
      if (!it->second.contains(key)) {
        throw ValidationError("config: unknown key '" + section + "." + key +
                              "'");
      }
      Apply(config, section, key, Trim(node.data()), base_dir);
    }
  }
  if (config.n < 1) throw ValidationError("topology.n must be >= 1");
  if (config.grid.repeats < 1) throw ValidationError("grid.repeats must be >= 1");
  return config;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str(), path.parent_path());
}

PreparedRun Prepare(const ExperimentConfig& config) {
  if (config.graph_kind == GraphKind::kCustom && !config.edges_file) {
    throw ValidationError("topology.kind = custom needs topology.edges_file");
  }
  const DirectedGraph graph =
      config.graph_kind == GraphKind::kCustom
          ? LoadEdgeList(*config.edges_file, config.n)
          : BuildGraph(config.graph_kind, config.n);
  auto mixing = std::make_shared<const MixingMatrix>(BuildMixing(graph));
  auto problem = std::make_shared<const Problem>(MakeProblem(config.problem, config.n));

  PreparedRun out;
  EngineConfig& e = out.engine;
  e.mixing = mixing;
  e.problem = problem;
  e.compressor = config.Compressor(problem->dimension());
  e.privacy = config.privacy;
  e.clip = config.clip;
  e.eta = config.eta;
  e.T = config.T;
  e.algorithm = config.algorithm;
  e.seed = config.seed;
  e.overflow_guard = config.overflow_guard;
  e.allow_inadmissible_omega = config.allow_inadmissible_omega;
  e.constants = EstimateConstants(*mixing, config.horizon);

  if (config.schedule == ScheduleMode::kTheory) {
    ScheduleInputs in;
    in.epsilon = config.privacy.epsilon;
    in.delta = config.privacy.delta;
    in.J = static_cast<std::int64_t>(problem->samples_per_node());
    in.n = config.n;
    in.d = problem->dimension();
    in.c2 = config.privacy.c2;
    in.c1 = config.privacy.c1;
    in.L = problem->objective->smoothness();
    in.G = config.privacy.clip_G;
    out.schedule = TheoreticalSchedule(in);
    e.T = out.schedule->T;
    e.eta = out.schedule->eta;
  }
  e = ResolveConfig(std::move(e));
  return out;
}

}  // namespace pushsim
