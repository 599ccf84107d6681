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

#ifndef PUSHSIM_RECORDS_H_
#define PUSHSIM_RECORDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pushsim/config.h"
#include "pushsim/diagnostics.h"
#include "pushsim/engine.h"
#include "pushsim/schedule.h"
#include "pushsim/topology.h"

namespace pushsim {

inline constexpr std::string_view kRecordsFile = "records.csv";
inline constexpr std::string_view kMetadataFile = "metadata.json";

// Shortest representation that parses back to the same double.
std::string FormatDouble(double v);

// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view bytes);
std::string HexDigest(std::uint64_t hash);

void WriteRecordsCsv(std::ostream& out, std::span<const RunRecord> records);
// Throws RuntimeFailure on malformed input.
std::vector<RunRecord> ReadRecordsCsv(std::istream& in);
std::vector<RunRecord> ReadRecordsCsv(const std::filesystem::path& path);

nlohmann::json ToJson(const ExperimentConfig& config);
nlohmann::json ToJson(const SpectralConstants& constants);
nlohmann::json ToJson(const Schedule& schedule);
nlohmann::json ToJson(const OmegaCheck& check);
nlohmann::json ToJson(const BudgetCheck& check);
nlohmann::json ToJson(const ErrorFeedbackReport& report);
nlohmann::json ToJson(const RunMetadata& metadata);

// The resolved engine inputs actually used by a run (after schedule and
// privacy resolution), without the data.
nlohmann::json EngineSummary(const EngineConfig& engine);

// Sidecar for one run: resolved config, engine inputs, constants, sigma^2,
// admissibility checks, the error-feedback diagnostic when it applies and the
// failure, if any.
nlohmann::json RunSidecar(const ExperimentConfig& config,
                          const PreparedRun& prepared,
                          const RunResult& result);

// Writes records.csv and metadata.json into dir (created if needed). The
// metadata file is written last, through a rename, so its presence marks a
// complete run.
void WriteRunOutputs(const std::filesystem::path& dir,
                     std::span<const RunRecord> records,
                     const nlohmann::json& sidecar);

// Writes text to path through a temporary file and rename.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view text);

}  // namespace pushsim

#endif  // PUSHSIM_RECORDS_H_
