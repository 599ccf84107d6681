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

#ifndef PUSHSIM_CONFIG_H_
#define PUSHSIM_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pushsim/compression.h"
#include "pushsim/engine.h"
#include "pushsim/privacy.h"
#include "pushsim/problems.h"
#include "pushsim/schedule.h"
#include "pushsim/topology.h"

namespace pushsim {

enum class ScheduleMode { kFixed, kTheory };

struct GridSpec {
  // Empty axes fall back to the single value of the base config.
  std::vector<double> epsilons;
  std::vector<std::string> compressors;  // labels such as "rand_0.5"
  std::vector<Algorithm> algorithms;
  int repeats = 5;
  std::filesystem::path out_dir = "grid_out";
};

// Everything a config file can say. Sections and keys:
//   [topology]    kind n edges_file horizon
//   [compression] kind a b float_width
//   [privacy]     epsilon delta clip_G c1 c2 enabled clip
//   [problem]     kind d J reg synth_seed hidden test_size separation csv
//   [run]         eta T algorithm seed overflow_guard allow_inadmissible_omega
//                 schedule (fixed | theory)
//   [grid]        epsilons compressors algorithms repeats out
struct ExperimentConfig {
  GraphKind graph_kind = GraphKind::kExponential;
  int n = 10;
  std::optional<std::filesystem::path> edges_file;
  int horizon = kDefaultHorizon;

  CompressorKind compressor_kind = CompressorKind::kIdentity;
  double rand_fraction = 0.5;
  int gsgd_bits = 8;
  int float_width = 32;

  PrivacySpec privacy;
  bool clip = true;

  ProblemSpec problem;

  double eta = 0.01;
  std::int64_t T = 100;
  Algorithm algorithm = Algorithm::kDpCsgp;
  std::uint64_t seed = 1;
  double overflow_guard = 1e12;
  bool allow_inadmissible_omega = false;
  ScheduleMode schedule = ScheduleMode::kFixed;

  GridSpec grid;

  CompressorSpec Compressor(std::size_t d) const;
  void SetCompressor(std::string_view label);
};

// Parses INI-style text. Relative file paths are resolved against base_dir.
// Unknown sections or keys and malformed values throw ValidationError.
ExperimentConfig ParseConfig(std::string_view text,
                             const std::filesystem::path& base_dir = {});
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// A config resolved into engine inputs: graph, mixing matrix, constants,
// problem data and, in theory mode, the derived schedule.
struct PreparedRun {
  EngineConfig engine;
  std::optional<Schedule> schedule;
};

PreparedRun Prepare(const ExperimentConfig& config);

}  // namespace pushsim

#endif  // PUSHSIM_CONFIG_H_
