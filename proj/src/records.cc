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

#include "pushsim/records.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pushsim/error.h"

namespace pushsim {
namespace {

using nlohmann::json;

constexpr std::string_view kHeader =
    "t,grad_norm_sq_avg,consensus_err,U_t,bits_cum,bits_paper_convention,"
    "loss_avg,test_acc";

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseField(const std::string& field) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return HUGE_VAL;
  if (field == "-inf") return -HUGE_VAL;
  std::size_t used = 0;
  const double v = std::stod(field, &used);
  if (used != field.size()) throw std::invalid_argument(field);
  return v;
}

json NumberOrNull(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexDigest(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

void WriteRecordsCsv(std::ostream& out, std::span<const RunRecord> records) {
  out << kHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.t << ',' << FormatDouble(r.grad_norm_sq_avg) << ','
        << FormatDouble(r.consensus_err) << ',' << FormatDouble(r.U_t) << ','
        << r.bits_cum << ',' << r.bits_paper_convention << ','
        << FormatDouble(r.loss_avg) << ','
        << (r.test_acc ? FormatDouble(*r.test_acc) : std::string()) << '\n';
  }
}

std::vector<RunRecord> ReadRecordsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw RuntimeFailure("records: missing or unexpected header");
  }
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 8) {
      throw RuntimeFailure("records: expected 8 fields in '" + line + "'");
    }
    try {
      RunRecord r;
      r.t = std::stoll(f[0]);
      r.grad_norm_sq_avg = ParseField(f[1]);
      r.consensus_err = ParseField(f[2]);
      r.U_t = ParseField(f[3]);
      r.bits_cum = std::stoll(f[4]);
      r.bits_paper_convention = std::stoll(f[5]);
      r.loss_avg = ParseField(f[6]);
      if (!f[7].empty()) r.test_acc = ParseField(f[7]);
      records.push_back(r);
    } catch (const std::logic_error&) {
      throw RuntimeFailure("records: malformed line '" + line + "'");
    }
  }
  return records;
}

std::vector<RunRecord> ReadRecordsCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path.string());
  return ReadRecordsCsv(in);
}

json ToJson(const ExperimentConfig& c) {
  json j;
  j["topology"] = {{"kind", GraphKindName(c.graph_kind)},
                   {"n", c.n},
                   {"edges_file", c.edges_file ? json(c.edges_file->string())
                                               : json(nullptr)},
                   {"horizon", c.horizon}};
  j["compression"] = {{"kind", c.Compressor(1).Label()},
                      {"a", c.rand_fraction},
                      {"b", c.gsgd_bits},
                      {"float_width", c.float_width}};
  j["privacy"] = {{"epsilon", c.privacy.epsilon}, {"delta", c.privacy.delta},
                  {"clip_G", c.privacy.clip_G},   {"c1", c.privacy.c1},
                  {"c2", c.privacy.c2},           {"enabled", c.privacy.enabled},
                  {"clip", c.clip}};
  j["problem"] = {
      {"kind", ObjectiveKindName(c.problem.kind)},
      {"d", c.problem.d},
      {"J", c.problem.J},
      {"reg", c.problem.reg},
      {"synth_seed", c.problem.synth_seed},
      {"hidden", c.problem.hidden},
      {"test_size", c.problem.test_size},
      {"separation", c.problem.separation},
      {"csv", c.problem.csv ? json(c.problem.csv->string()) : json(nullptr)}};
  j["run"] = {{"eta", c.eta},
              {"T", c.T},
              {"algorithm", AlgorithmName(c.algorithm)},
              {"seed", c.seed},
              {"overflow_guard", c.overflow_guard},
              {"allow_inadmissible_omega", c.allow_inadmissible_omega},
              {"schedule",
               c.schedule == ScheduleMode::kTheory ? "theory" : "fixed"}};
  json algorithms = json::array();
  for (const Algorithm a : c.grid.algorithms) algorithms.push_back(AlgorithmName(a));
  j["grid"] = {{"epsilons", c.grid.epsilons},
               {"compressors", c.grid.compressors},
               {"algorithms", algorithms},
               {"repeats", c.grid.repeats},
               {"out", c.grid.out_dir.string()}};
  return j;
}

json ToJson(const SpectralConstants& s) {
  std::vector<double> phi(s.phi.data(), s.phi.data() + s.phi.size());
  return {{"phi", phi},     {"lambda", s.lambda}, {"C", s.C},
          {"beta", s.beta}, {"gamma", s.gamma},   {"horizon", s.horizon}};
}

json ToJson(const Schedule& s) {
  return {{"T", s.T},
          {"eta", s.eta},
          {"sigma_sq", s.sigma_sq},
          {"j_condition", s.j_condition},
          {"j_required", s.j_required},
          {"epsilon_condition", s.epsilon_condition},
          {"epsilon_bound", s.epsilon_bound}};
}

json ToJson(const OmegaCheck& c) {
  return {{"ok", c.ok},
          {"omega_sq", c.omega_sq},
          {"rho", c.rho},
          {"threshold", c.threshold},
          {"ratio", NumberOrNull(c.ratio)}};
}

json ToJson(const BudgetCheck& c) {
  return {{"ok", c.ok}, {"bound", c.bound}, {"reason", c.reason}};
}

json ToJson(const ErrorFeedbackReport& r) {
  return {{"zeta", r.zeta},
          {"bound", r.bound},
          {"max_ratio", NumberOrNull(r.max_ratio)},
          {"worst_t", r.worst_t},
          {"first_violation_t", r.first_violation_t
                                    ? json(*r.first_violation_t)
                                    : json(nullptr)},
          {"within_bound", r.within_bound()}};
}

json ToJson(const RunMetadata& m) {
  json j;
  j["sigma_sq"] = m.sigma_sq;
  j["private_run"] = m.private_run;
  j["budget"] = ToJson(m.budget);
  j["omega_sq"] = m.omega_sq;
  j["constants"] = m.constants ? ToJson(*m.constants) : json(nullptr);
  j["omega"] = m.omega ? ToJson(*m.omega) : json(nullptr);
  j["max_weight_sum_error"] = NumberOrNull(m.max_weight_sum_error);
  j["min_weight"] = NumberOrNull(m.min_weight);
  j["max_average_identity_residual"] =
      NumberOrNull(m.max_average_identity_residual);
  j["failure"] = m.failure ? json(*m.failure) : json(nullptr);
  j["failed_at"] = m.failed_at;
  return j;
}

json EngineSummary(const EngineConfig& e) {
  return {{"eta", e.eta},
          {"T", e.T},
          {"algorithm", AlgorithmName(e.algorithm)},
          {"seed", e.seed},
          {"n", e.mixing ? e.mixing->size() : 0},
          {"d", e.problem ? e.problem->dimension() : 0},
          {"J", e.problem ? e.problem->samples_per_node() : 0},
          {"dropped_samples", e.problem ? e.problem->dropped : 0},
          {"L", e.problem ? e.problem->objective->smoothness() : 0.0},
          {"compressor", e.compressor.Label()},
          {"message_bits", MessageBits(e.compressor)},
          {"clip", e.clip},
          {"clip_G", e.privacy.clip_G},
          {"epsilon", e.privacy.epsilon},
          {"delta", e.privacy.delta},
          {"private", e.privacy.enabled}};
}

json RunSidecar(const ExperimentConfig& config, const PreparedRun& prepared,
                const RunResult& result) {
  json j;
  j["config"] = ToJson(config);
  j["engine"] = EngineSummary(prepared.engine);
  j["schedule"] =
      prepared.schedule ? ToJson(*prepared.schedule) : json(nullptr);
  j["run"] = ToJson(result.metadata);
  j["records"] = result.records.size();
  try {
    j["error_feedback"] = ToJson(ErrorFeedbackDiagnostic(result, prepared.engine));
  } catch (const ValidationError& e) {
    j["error_feedback"] = {{"skipped", e.what()}};
  }
  return j;
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << text;
    if (!out) throw RuntimeFailure("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void WriteRunOutputs(const std::filesystem::path& dir,
                     std::span<const RunRecord> records, const json& sidecar) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  WriteRecordsCsv(csv, records);
  WriteFileAtomic(dir / kRecordsFile, csv.str());
  WriteFileAtomic(dir / kMetadataFile, sidecar.dump(2) + "\n");
}

}  // namespace pushsim
