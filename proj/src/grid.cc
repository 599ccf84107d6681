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

#include "pushsim/grid.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "pushsim/error.h"
#include "pushsim/records.h"

namespace pushsim {
namespace {

using nlohmann::json;

struct Stats {
  double mean = std::nan("");
  double std = std::nan("");
};

// Sums in the given order so callers can reproduce the result exactly.
Stats MeanStd(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (const double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() == 1) {
    s.std = 0.0;
    return s;
  }
  double ss = 0.0;
  for (const double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return s;
}

std::string CsvQuote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string Opt(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string();
}

struct LoadedRun {
  int repeat = 0;
  std::vector<RunRecord> records;
  std::optional<std::string> failure;
};

struct LoadedCell {
  CellSummary info;
  std::vector<LoadedRun> runs;
};

bool HasAccuracy(const std::vector<RunRecord>& records) {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const RunRecord& r) { return r.test_acc.has_value(); });
}

}  // namespace

std::uint64_t CellSeed(std::uint64_t master_seed, int cell_index,
                       int repeat_index) {
  return master_seed + static_cast<std::uint64_t>(cell_index) * 10007ULL +
         static_cast<std::uint64_t>(repeat_index);
}

std::string GridCell::DirectoryName() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cell_%03d", index);
  return buf;
}

ExperimentConfig GridCell::RunConfig(int repeat) const {
  ExperimentConfig c = config;
  c.seed = seeds.at(static_cast<std::size_t>(repeat));
  return c;
}

GridPlan ExpandGrid(const ExperimentConfig& base) {
  const GridSpec& g = base.grid;
  if (g.repeats < 1) throw ValidationError("grid.repeats must be >= 1");

  std::vector<double> epsilons = g.epsilons;
  if (epsilons.empty()) epsilons.push_back(base.privacy.epsilon);
  std::vector<std::string> compressors = g.compressors;
  if (compressors.empty()) compressors.push_back(base.Compressor(1).Label());
  std::vector<Algorithm> algorithms = g.algorithms;
  if (algorithms.empty()) algorithms.push_back(base.algorithm);

  GridPlan plan;
  plan.out_dir = g.out_dir;
  plan.repeats = g.repeats;
  for (const double eps : epsilons) {
    bool baseline_added = false;
    for (const std::string& label : compressors) {
      for (const Algorithm algorithm : algorithms) {
        GridCell cell;
        cell.epsilon = eps;
        cell.algorithm = algorithm;
        cell.compressor = label;
        if (algorithm == Algorithm::kExactSgpBaseline) {
          if (baseline_added) continue;
          baseline_added = true;
          cell.compressor = "identity";
        }
        cell.index = static_cast<int>(plan.cells.size());
        cell.config = base;
        cell.config.privacy.epsilon = eps;
        cell.config.algorithm = algorithm;
        cell.config.SetCompressor(cell.compressor);
        for (int r = 0; r < g.repeats; ++r) {
          cell.seeds.push_back(CellSeed(base.seed, cell.index, r));
        }
        try {
          const PreparedRun prepared = Prepare(cell.config);
          const Simulation check(prepared.engine);
        } catch (const ValidationError& e) {
          throw ValidationError("grid " + cell.DirectoryName() + " (epsilon " +
                                FormatDouble(eps) + ", " + cell.compressor +
                                ", " + std::string(AlgorithmName(algorithm)) +
                                "): " + e.what());
        }
        plan.cells.push_back(std::move(cell));
      }
    }
  }
  return plan;
}

std::filesystem::path RunDirectory(const GridPlan& plan, const GridCell& cell,
                                   int repeat) {
  return plan.out_dir / cell.DirectoryName() /
         ("seed_" + std::to_string(cell.seeds.at(static_cast<std::size_t>(repeat))));
}

std::string RunKey(const ExperimentConfig& run_config) {
  json j = ToJson(run_config);
  j.erase("grid");
  return HexDigest(Fnv1a(j.dump()));
}

GridOutcome RunGrid(const GridPlan& plan, std::ostream* log) {
  GridOutcome outcome;
  for (const GridCell& cell : plan.cells) {
    for (int r = 0; r < plan.repeats; ++r) {
      ++outcome.runs;
      const ExperimentConfig rc = cell.RunConfig(r);
      const std::string key = RunKey(rc);
      const std::filesystem::path dir = RunDirectory(plan, cell, r);
      const std::filesystem::path meta_path = dir / kMetadataFile;

      if (std::filesystem::exists(meta_path) &&
          std::filesystem::exists(dir / kRecordsFile)) {
        std::ifstream in(meta_path);
        const json existing = json::parse(in, nullptr, false);
        if (!existing.is_discarded() && existing.value("run_key", "") == key) {
          ++outcome.skipped;
          if (!existing["run"]["failure"].is_null()) ++outcome.failed;
          continue;
        }
      }

      json sidecar;
      std::vector<RunRecord> records;
      bool ok = true;
      try {
        const PreparedRun prepared = Prepare(rc);
        RunResult result = Run(prepared.engine);
        sidecar = RunSidecar(rc, prepared, result);
        ok = result.ok();
        records = std::move(result.records);
      } catch (const std::exception& e) {
        ok = false;
        sidecar["config"] = ToJson(rc);
        sidecar["run"] = {{"failure", e.what()}, {"failed_at", 0}};
      }
      sidecar["cell"] = {{"index", cell.index},
                         {"epsilon", cell.epsilon},
                         {"compressor", cell.compressor},
                         {"algorithm", AlgorithmName(cell.algorithm)},
                         {"repeat", r},
                         {"seed", rc.seed}};
      sidecar["run_key"] = key;
      WriteRunOutputs(dir, records, sidecar);
      ++outcome.executed;
      if (!ok) ++outcome.failed;
      if (log) {
        *log << cell.DirectoryName() << " seed " << rc.seed << ": "
             << (ok ? "ok" : "failed: " + sidecar["run"]["failure"].get<std::string>())
             << '\n';
      }
    }
  }
  AnalyzeDirectory(plan.out_dir, plan.out_dir / "summary.csv");
  return outcome;
}

Analysis AnalyzeRuns(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw RuntimeFailure("not a directory: " + dir.string());
  }
  std::map<int, LoadedCell> cells;
  std::vector<std::filesystem::path> metas;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == kMetadataFile) {
      metas.push_back(entry.path());
    }
  }
  for (const auto& meta_path : metas) {
    std::ifstream in(meta_path);
    const json meta = json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.contains("cell")) continue;
    const json& c = meta["cell"];
    LoadedCell& cell = cells[c["index"].get<int>()];
    cell.info.cell = c["index"].get<int>();
    cell.info.epsilon = c["epsilon"].get<double>();
    cell.info.compressor = c["compressor"].get<std::string>();
    cell.info.algorithm = c["algorithm"].get<std::string>();
    LoadedRun run;
    run.repeat = c["repeat"].get<int>();
    if (!meta["run"]["failure"].is_null()) {
      run.failure = meta["run"]["failure"].get<std::string>();
    }
    run.records = ReadRecordsCsv(meta_path.parent_path() / kRecordsFile);
    cell.runs.push_back(std::move(run));
  }

  Analysis analysis;
  double max_bits = 0.0;
  for (auto& [index, cell] : cells) {
    std::sort(cell.runs.begin(), cell.runs.end(),
              [](const LoadedRun& a, const LoadedRun& b) {
                return a.repeat < b.repeat;
              });
    std::vector<double> loss, acc, grad, bits, avg_grad;
    bool all_acc = true;
    for (const LoadedRun& run : cell.runs) {
      if (run.failure || run.records.empty()) {
        ++cell.info.failed;
        cell.info.failures.push_back(run.failure.value_or("no records"));
        continue;
      }
      const RunRecord& last = run.records.back();
      loss.push_back(last.loss_avg);
      grad.push_back(last.grad_norm_sq_avg);
      bits.push_back(static_cast<double>(last.bits_cum));
      avg_grad.push_back(UtilityMetric(run.records));
      if (last.test_acc) acc.push_back(*last.test_acc);
      else all_acc = false;
      max_bits = std::max(max_bits, static_cast<double>(last.bits_cum));
    }
    cell.info.runs = static_cast<int>(loss.size());
    const Stats l = MeanStd(loss), g = MeanStd(grad), b = MeanStd(bits),
                a = MeanStd(avg_grad);
    cell.info.final_loss_mean = l.mean;
    cell.info.final_loss_std = l.std;
    cell.info.final_grad_norm_sq_mean = g.mean;
    cell.info.final_grad_norm_sq_std = g.std;
    cell.info.bits_cum_mean = b.mean;
    cell.info.bits_cum_std = b.std;
    cell.info.avg_grad_norm_sq_mean = a.mean;
    cell.info.avg_grad_norm_sq_std = a.std;
    if (all_acc && !acc.empty()) {
      const Stats s = MeanStd(acc);
      cell.info.final_acc_mean = s.mean;
      cell.info.final_acc_std = s.std;
    }
    analysis.cells.push_back(cell.info);
  }

  if (max_bits > 0.0) {
    for (int k = 0; k < kCurvePoints; ++k) {
      analysis.bit_grid.push_back(max_bits * k / (kCurvePoints - 1));
    }
  } else {
    analysis.bit_grid.push_back(0.0);
  }

  for (const auto& [index, cell] : cells) {
    std::vector<const LoadedRun*> ok;
    for (const LoadedRun& run : cell.runs) {
      if (!run.failure && !run.records.empty()) ok.push_back(&run);
    }
    for (const double b : analysis.bit_grid) {
      CurvePoint p;
      p.cell = index;
      p.bits = b;
      if (!ok.empty()) {
        double acc_sum = 0.0, loss_sum = 0.0;
        bool acc_ok = true, loss_ok = true;
        for (const LoadedRun* run : ok) {
          std::vector<double> xs, accs, losses;
          for (const RunRecord& r : run->records) {
            xs.push_back(static_cast<double>(r.bits_cum));
            losses.push_back(r.loss_avg);
            accs.push_back(r.test_acc.value_or(std::nan("")));
          }
          const auto lv = Interpolate(xs, losses, b);
          if (lv) loss_sum += *lv;
          else loss_ok = false;
          const auto av = HasAccuracy(run->records)
                              ? Interpolate(xs, accs, b)
                              : std::nullopt;
          if (av) acc_sum += *av;
          else acc_ok = false;
        }
        const double count = static_cast<double>(ok.size());
        if (loss_ok) p.loss = loss_sum / count;
        if (acc_ok) p.test_acc = acc_sum / count;
      }
      analysis.curves.push_back(p);
    }
  }
  return analysis;
}

void WriteSummaryCsv(std::ostream& out, const Analysis& analysis) {
  out << "cell,epsilon,compressor,algorithm,runs,failed,final_loss_mean,"
         "final_loss_std,final_acc_mean,final_acc_std,"
         "final_grad_norm_sq_mean,final_grad_norm_sq_std,bits_cum_mean,"
         "bits_cum_std,avg_grad_norm_sq_mean,avg_grad_norm_sq_std,failures\n";
  for (const CellSummary& c : analysis.cells) {
    std::string failures;
    for (const auto& f : c.failures) {
      if (!failures.empty()) failures += " | ";
      failures += f;
    }
    out << c.cell << ',' << FormatDouble(c.epsilon) << ',' << c.compressor
        << ',' << c.algorithm << ',' << c.runs << ',' << c.failed << ','
        << FormatDouble(c.final_loss_mean) << ','
        << FormatDouble(c.final_loss_std) << ',' << Opt(c.final_acc_mean)
        << ',' << Opt(c.final_acc_std) << ','
        << FormatDouble(c.final_grad_norm_sq_mean) << ','
        << FormatDouble(c.final_grad_norm_sq_std) << ','
        << FormatDouble(c.bits_cum_mean) << ','
        << FormatDouble(c.bits_cum_std) << ','
        << FormatDouble(c.avg_grad_norm_sq_mean) << ','
        << FormatDouble(c.avg_grad_norm_sq_std) << ',' << CsvQuote(failures)
        << '\n';
  }
}

void WriteCurvesCsv(std::ostream& out, const Analysis& analysis) {
  std::map<int, const CellSummary*> info;
  for (const CellSummary& c : analysis.cells) info[c.cell] = &c;
  out << "cell,epsilon,compressor,algorithm,bits,test_acc_mean,loss_avg_mean\n";
  for (const CurvePoint& p : analysis.curves) {
    const CellSummary& c = *info.at(p.cell);
    out << p.cell << ',' << FormatDouble(c.epsilon) << ',' << c.compressor
        << ',' << c.algorithm << ',' << FormatDouble(p.bits) << ','
        << Opt(p.test_acc) << ',' << Opt(p.loss) << '\n';
  }
}

Analysis AnalyzeDirectory(const std::filesystem::path& dir,
                          const std::filesystem::path& summary_path) {
  Analysis analysis = AnalyzeRuns(dir);
  if (summary_path.has_parent_path()) {
    std::filesystem::create_directories(summary_path.parent_path());
  }
  std::ostringstream summary, curves;
  WriteSummaryCsv(summary, analysis);
  WriteCurvesCsv(curves, analysis);
  WriteFileAtomic(summary_path, summary.str());
  std::filesystem::path curves_path = summary_path;
  curves_path.replace_filename(summary_path.stem().string() + "_curves.csv");
  WriteFileAtomic(curves_path, curves.str());
  return analysis;
}

std::optional<double> Interpolate(std::span<const double> xs,
                                  std::span<const double> ys, double x) {
  if (xs.empty() || xs.size() != ys.size()) return std::nullopt;
  if (x < xs.front() || x > xs.back()) return std::nullopt;
  // Last index with xs[k] <= x.
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
  if (xs[k] == x || k + 1 == xs.size()) return ys[k];
  const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
  return ys[k] + w * (ys[k + 1] - ys[k]);
}

double UtilityMetric(std::span<const RunRecord> records) {
  if (records.empty()) return std::nan("");
  double sum = 0.0;
  for (const RunRecord& r : records) sum += r.grad_norm_sq_avg;
  return sum / static_cast<double>(records.size());
}

UtilityProbeReport UtilityProbe(std::span<const ProbeRun> runs) {
  std::map<int, std::vector<double>> by_n;
  for (const ProbeRun& r : runs) {
    if (!(r.sigma_sq > 0.0)) {
      throw ValidationError(
          "utility probe needs private runs (sigma^2 > 0); n = " +
          std::to_string(r.n) + " has sigma^2 = " + FormatDouble(r.sigma_sq));
    }
    by_n[r.n].push_back(r.metric);
  }
  if (by_n.size() < 2) {
    throw ValidationError("utility probe needs at least two values of n");
  }
  UtilityProbeReport report;
  report.decreasing = true;
  for (const auto& [n, metrics] : by_n) {
    if (metrics.size() < 5) {
      throw ValidationError("utility probe needs at least 5 seeds per n; n = " +
                            std::to_string(n) + " has " +
                            std::to_string(metrics.size()));
    }
    const Stats s = MeanStd(metrics);
    UtilityProbeRow row;
    row.n = n;
    row.seeds = static_cast<int>(metrics.size());
    row.metric_mean = s.mean;
    row.metric_std = s.std;
    if (!report.rows.empty()) {
      row.ratio_to_previous = s.mean / report.rows.back().metric_mean;
      if (!(*row.ratio_to_previous < 1.0)) report.decreasing = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

UtilityProbeReport RunUtilityProbe(const ExperimentConfig& base,
                                   std::span<const int> ns, int seeds) {
  if (base.problem.kind != ObjectiveKind::kQuadratic) {
    throw ValidationError("utility probe runs on the quadratic objective");
  }
  if (base.schedule != ScheduleMode::kTheory) {
    throw ValidationError("utility probe needs run.schedule = theory");
  }
  if (!base.privacy.enabled) {
    throw ValidationError("utility probe needs privacy enabled");
  }
  std::vector<ProbeRun> runs;
  for (const int n : ns) {
    for (int k = 0; k < seeds; ++k) {
      ExperimentConfig c = base;
      c.n = n;
      c.seed = base.seed + static_cast<std::uint64_t>(k);
      const PreparedRun prepared = Prepare(c);
      const RunResult result = Run(prepared.engine);
      if (!result.ok()) {
        throw RuntimeFailure("utility probe run n = " + std::to_string(n) +
                             " failed: " + *result.metadata.failure);
      }
      runs.push_back({n, result.metadata.sigma_sq, UtilityMetric(result.records)});
    }
  }
  return UtilityProbe(runs);
}

}  // namespace pushsim
