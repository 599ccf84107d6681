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

#ifndef PUSHSIM_GRID_H_
#define PUSHSIM_GRID_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pushsim/config.h"
#include "pushsim/engine.h"

namespace pushsim {

// master_seed + cell_index * 10007 + repeat_index
std::uint64_t CellSeed(std::uint64_t master_seed, int cell_index,
                       int repeat_index);

struct GridCell {
  int index = 0;
  double epsilon = 0.0;
  std::string compressor;  // label
  Algorithm algorithm = Algorithm::kDpCsgp;
  ExperimentConfig config;  // run.seed holds the master seed
  std::vector<std::uint64_t> seeds;

  std::string DirectoryName() const;  // "cell_003"
  ExperimentConfig RunConfig(int repeat) const;
};

struct GridPlan {
  std::vector<GridCell> cells;
  std::filesystem::path out_dir;
  int repeats = 0;
};

// Cartesian product epsilon x compressor x algorithm (outer to inner); empty
// axes take the base config's value. The baseline algorithm always sends
// exact messages, so its compressor axis collapses to "identity". Every cell
// is prepared and checked before this returns; the first invalid cell throws
// ValidationError naming the cell.
GridPlan ExpandGrid(const ExperimentConfig& base);

std::filesystem::path RunDirectory(const GridPlan& plan, const GridCell& cell,
                                   int repeat);

// Resume key of one run: hash of its resolved config.
std::string RunKey(const ExperimentConfig& run_config);

struct GridOutcome {
  int runs = 0;
  int executed = 0;
  int skipped = 0;  // already complete with a matching key
  int failed = 0;
};

// Runs every cell x seed into out_dir/cell_XXX/seed_S/, skipping runs whose
// metadata already carries a matching key. A failing run is recorded in its
// metadata and the grid continues. Finishes with AnalyzeDirectory into
// out_dir/summary.csv. Progress lines go to log when given.
GridOutcome RunGrid(const GridPlan& plan, std::ostream* log = nullptr);

struct CellSummary {
  int cell = 0;
  double epsilon = 0.0;
  std::string compressor;
  std::string algorithm;
  int runs = 0;    // successful runs entering the statistics
  int failed = 0;
  std::vector<std::string> failures;
  // Mean and sample standard deviation (0 for a single run) over runs.
  double final_loss_mean = 0.0, final_loss_std = 0.0;
  std::optional<double> final_acc_mean, final_acc_std;
  double final_grad_norm_sq_mean = 0.0, final_grad_norm_sq_std = 0.0;
  double bits_cum_mean = 0.0, bits_cum_std = 0.0;
  // (1/T) sum_t grad_norm_sq_avg, the quantity the utility bound controls.
  double avg_grad_norm_sq_mean = 0.0, avg_grad_norm_sq_std = 0.0;
};

struct CurvePoint {
  int cell = 0;
  double bits = 0.0;
  std::optional<double> test_acc;  // mean over runs, nullopt outside range
  std::optional<double> loss;
};

struct Analysis {
  std::vector<CellSummary> cells;
  std::vector<double> bit_grid;
  std::vector<CurvePoint> curves;
};

inline constexpr int kCurvePoints = 101;

// Reads every cell_*/seed_*/ run below dir.
Analysis AnalyzeRuns(const std::filesystem::path& dir);

void WriteSummaryCsv(std::ostream& out, const Analysis& analysis);
void WriteCurvesCsv(std::ostream& out, const Analysis& analysis);

// Writes summary_path and, next to it, <stem>_curves.csv.
Analysis AnalyzeDirectory(const std::filesystem::path& dir,
                          const std::filesystem::path& summary_path);

// Linear interpolation of (xs, ys) at x; nullopt outside [xs.front(),
// xs.back()]. xs must be non-decreasing; on ties the last point wins.
std::optional<double> Interpolate(std::span<const double> xs,
                                  std::span<const double> ys, double x);

// (1/T) sum_t ||grad f(x-bar^t)||^2 over a run's records.
double UtilityMetric(std::span<const RunRecord> records);

struct ProbeRun {
  int n = 0;
  double sigma_sq = 0.0;
  double metric = 0.0;
};

struct UtilityProbeRow {
  int n = 0;
  int seeds = 0;
  double metric_mean = 0.0;
  double metric_std = 0.0;
  std::optional<double> ratio_to_previous;  // metric(n) / metric(previous n)
};

struct UtilityProbeReport {
  std::vector<UtilityProbeRow> rows;  // ascending n
  bool decreasing = false;            // every ratio < 1
};

// Throws ValidationError unless there are at least two values of n, each
// with at least five runs, all with sigma^2 > 0.
UtilityProbeReport UtilityProbe(std::span<const ProbeRun> runs);

// Runs base (quadratic objective, theory schedule, privacy on) for each n
// with seeds base.run.seed + k, k < seeds, and feeds UtilityProbe.
UtilityProbeReport RunUtilityProbe(const ExperimentConfig& base,
                                   std::span<const int> ns, int seeds = 5);

}  // namespace pushsim

#endif  // PUSHSIM_GRID_H_
