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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pushsim/config.h"
#include "pushsim/error.h"
#include "pushsim/grid.h"
#include "pushsim/records.h"
#include "pushsim/schedule.h"

namespace pushsim {
namespace {

namespace fs = std::filesystem;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("pushsim_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

constexpr const char* kSmallGrid = R"(
[topology]
kind = ring
n = 4

[compression]
kind = identity

[privacy]
epsilon = 0.5
delta = 1e-4

[problem]
kind = logistic
d = 6
J = 30
test_size = 200

[run]
eta = 0.05
T = 25
seed = 11
allow_inadmissible_omega = true

[grid]
epsilons = 0.3, 0.6
compressors = identity, rand_0.5
algorithms = dp-csgp
repeats = 2
)";

ScheduleInputs WorkedInputs() {
  ScheduleInputs in;
  in.epsilon = 0.5;
  in.delta = 1e-4;
  in.J = 1000;
  in.d = 10;
  in.c2 = 1.0;
  in.n = 10;
  in.L = 1.0;
  return in;
}

TEST(ScheduleTest, WorkedHorizonAndStep) {
  const Schedule s = TheoreticalSchedule(WorkedInputs());
  // 1000^2 * 0.25 / (10 ln 1e4) = 250000 / 92.103...
  EXPECT_EQ(s.T, 2714);
  const double l = std::log(1e4);
  EXPECT_NEAR(s.eta, 1.0 / (500.0 / std::sqrt(100.0 * l) + 1.0), 1e-15);
  EXPECT_NEAR(s.eta, 0.05722, 1e-5);
  EXPECT_NEAR(s.sigma_sq, 2714.0 * l / (1e6 * 0.25), 1e-15);
  EXPECT_GT(s.sigma_sq, 0.0);
}

TEST(ScheduleTest, HorizonClampsToOne) {
  ScheduleInputs in = WorkedInputs();
  in.J = 1;
  in.d = 100000;
  EXPECT_EQ(TheoreticalSchedule(in).T, 1);
}

TEST(ScheduleTest, Conditions) {
  ScheduleInputs in = WorkedInputs();
  Schedule s = TheoreticalSchedule(in);
  // c2 sqrt(d ln(1/delta)) n^{5/2} / eps = sqrt(92.1) * 316.2 / 0.5.
  EXPECT_NEAR(s.j_required,
              std::sqrt(10 * std::log(1e4)) * std::pow(10.0, 2.5) / 0.5, 1e-9);
  EXPECT_FALSE(s.j_condition);
  EXPECT_FALSE(s.epsilon_condition);
  in.n = 2;
  EXPECT_TRUE(TheoreticalSchedule(in).j_condition);
}

TEST(ScheduleTest, RejectsBadDelta) {
  ScheduleInputs in = WorkedInputs();
  in.delta = 1.0;
  EXPECT_THROW(TheoreticalSchedule(in), ValidationError);
  in.delta = 0.0;
  EXPECT_THROW(TheoreticalSchedule(in), ValidationError);
  in.delta = 0.1;
  in.L = 0.0;
  EXPECT_THROW(TheoreticalSchedule(in), ValidationError);
}

TEST(ConfigTest, ParsesEverySection) {
  const ExperimentConfig c = ParseConfig(kSmallGrid);
  EXPECT_EQ(c.graph_kind, GraphKind::kRing);
  EXPECT_EQ(c.n, 4);
  EXPECT_EQ(c.problem.kind, ObjectiveKind::kLogistic);
  EXPECT_EQ(c.problem.d, 6u);
  EXPECT_EQ(c.T, 25);
  EXPECT_TRUE(c.allow_inadmissible_omega);
  EXPECT_EQ(c.grid.epsilons, (std::vector<double>{0.3, 0.6}));
  EXPECT_EQ(c.grid.compressors,
            (std::vector<std::string>{"identity", "rand_0.5"}));
  EXPECT_EQ(c.grid.repeats, 2);
}

TEST(ConfigTest, DefaultsWhenEmpty) {
  const ExperimentConfig c = ParseConfig("");
  EXPECT_EQ(c.grid.repeats, 5);
  EXPECT_EQ(c.graph_kind, GraphKind::kExponential);
  EXPECT_TRUE(c.clip);
  EXPECT_EQ(c.schedule, ScheduleMode::kFixed);
}

TEST(ConfigTest, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ParseConfig("[run]\nsteps = 3\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[runner]\nT = 3\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[run]\nT = three\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[run]\neta = 0.1x\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[privacy]\nclip = maybe\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[compression]\nkind = topk\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[grid]\ncompressors = identity, bogus\n"),
               ValidationError);
  EXPECT_THROW(ParseConfig("[run]\nschedule = adaptive\n"), ValidationError);
  EXPECT_THROW(ParseConfig("[topology]\nn = 0\n"), ValidationError);
}

TEST(ConfigTest, TheoryScheduleOverridesStepAndHorizon) {
  ExperimentConfig c = ParseConfig(
      "[problem]\nkind = quadratic\nd = 10\nJ = 200\n"
      "[topology]\nn = 4\n[privacy]\nepsilon = 0.5\n[run]\nschedule = theory\n");
  const PreparedRun p = Prepare(c);
  ASSERT_TRUE(p.schedule.has_value());
  EXPECT_EQ(p.engine.T, p.schedule->T);
  EXPECT_EQ(p.engine.eta, p.schedule->eta);
  EXPECT_EQ(p.schedule->T,
            static_cast<std::int64_t>(200.0 * 200.0 * 0.25 / (10 * std::log(1e4))));
}

TEST(ConfigTest, CustomTopologyReadsEdgeFileRelativeToConfig) {
  TempDir dir("config_edges");
  {
    std::ofstream(dir.path() / "edges.txt") << "0 1\n1 2\n2 0\n";
    std::ofstream(dir.path() / "run.ini")
        << "[topology]\nkind = custom\nn = 3\nedges_file = edges.txt\n"
           "[problem]\nd = 2\nJ = 4\n";
  }
  const ExperimentConfig c = LoadConfig(dir.path() / "run.ini");
  const PreparedRun p = Prepare(c);
  EXPECT_TRUE(p.engine.mixing->graph().HasEdge(1, 2));
  EXPECT_FALSE(p.engine.mixing->graph().HasEdge(2, 1));
  EXPECT_THROW(Prepare(ParseConfig("[topology]\nkind = custom\n")),
               ValidationError);
}

TEST(RecordsTest, CsvRoundTrip) {
  std::vector<RunRecord> records(3);
  for (int t = 0; t < 3; ++t) {
    records[t].t = t + 1;
    records[t].grad_norm_sq_avg = 0.1 / (t + 1);
    records[t].consensus_err = 1e-300 * t;
    records[t].U_t = std::nextafter(1.0 / 3.0, 1.0);
    records[t].bits_cum = 1000 * (t + 1);
    records[t].bits_paper_convention = 900 * (t + 1);
    records[t].loss_avg = -0.0 + t;
    if (t != 1) records[t].test_acc = 0.5 + 0.1 * t;
  }
  std::stringstream s;
  WriteRecordsCsv(s, records);
  const auto back = ReadRecordsCsv(s);
  ASSERT_EQ(back.size(), 3u);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(back[t].t, records[t].t);
    EXPECT_EQ(back[t].grad_norm_sq_avg, records[t].grad_norm_sq_avg);
    EXPECT_EQ(back[t].consensus_err, records[t].consensus_err);
    EXPECT_EQ(back[t].U_t, records[t].U_t);
    EXPECT_EQ(back[t].bits_cum, records[t].bits_cum);
    EXPECT_EQ(back[t].test_acc, records[t].test_acc);
  }
  std::stringstream bad("t,x\n1,2\n");
  EXPECT_THROW(ReadRecordsCsv(bad), RuntimeFailure);
}

TEST(RecordsTest, HashIsStableAndSensitive) {
  EXPECT_EQ(Fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  ExperimentConfig a = ParseConfig(kSmallGrid);
  ExperimentConfig b = a;
  EXPECT_EQ(RunKey(a), RunKey(b));
  b.seed += 1;
  EXPECT_NE(RunKey(a), RunKey(b));
  b = a;
  b.grid.repeats = 9;  // grid layout does not change a run
  EXPECT_EQ(RunKey(a), RunKey(b));
}

TEST(InterpolateTest, LinearInsideBlankOutside) {
  const std::vector<double> xs{0, 10, 20, 20, 40};
  const std::vector<double> ys{0, 1, 2, 3, 5};
  EXPECT_EQ(Interpolate(xs, ys, 5.0), 0.5);
  EXPECT_EQ(Interpolate(xs, ys, 20.0), 3.0);
  EXPECT_EQ(Interpolate(xs, ys, 30.0), 4.0);
  EXPECT_EQ(Interpolate(xs, ys, 40.0), 5.0);
  EXPECT_FALSE(Interpolate(xs, ys, 41.0).has_value());
  EXPECT_FALSE(Interpolate(xs, ys, -1.0).has_value());
}

TEST(GridTest, SeedsFollowTheCellFormula) {
  EXPECT_EQ(CellSeed(11, 0, 0), 11u);
  EXPECT_EQ(CellSeed(11, 3, 2), 11u + 3u * 10007u + 2u);
}

TEST(GridTest, ExpandsAxesAndCollapsesBaselineCompressors) {
  ExperimentConfig c = ParseConfig(kSmallGrid);
  c.grid.algorithms = {Algorithm::kDpCsgp, Algorithm::kExactSgpBaseline};
  const GridPlan plan = ExpandGrid(c);
  // Per epsilon: dp-csgp x {identity, rand_0.5} plus one baseline.
  ASSERT_EQ(plan.cells.size(), 6u);
  EXPECT_EQ(plan.cells[1].algorithm, Algorithm::kExactSgpBaseline);
  EXPECT_EQ(plan.cells[1].compressor, "identity");
  EXPECT_EQ(plan.cells[2].compressor, "rand_0.5");
  EXPECT_EQ(plan.cells[3].epsilon, 0.6);
  for (const GridCell& cell : plan.cells) {
    ASSERT_EQ(cell.seeds.size(), 2u);
    EXPECT_EQ(cell.seeds[1], CellSeed(11, cell.index, 1));
  }
}

TEST(GridTest, InvalidCellFailsBeforeAnyRun) {
  TempDir dir("grid_invalid");
  ExperimentConfig c = ParseConfig(kSmallGrid);
  c.allow_inadmissible_omega = false;
  c.grid.out_dir = dir.path() / "out";
  EXPECT_THROW(ExpandGrid(c), ValidationError);
  EXPECT_FALSE(fs::exists(dir.path() / "out"));
}

TEST(GridTest, SummaryMeansAreExactAndRerunsAreByteIdentical) {
  TempDir dir("grid_run");
  ExperimentConfig c = ParseConfig(kSmallGrid);
  c.grid.out_dir = dir.path() / "a";
  const GridPlan plan = ExpandGrid(c);
  const GridOutcome first = RunGrid(plan);
  EXPECT_EQ(first.runs, 8);
  EXPECT_EQ(first.executed, 8);
  EXPECT_EQ(first.failed, 0);

  const Analysis analysis = AnalyzeRuns(plan.out_dir);
  ASSERT_EQ(analysis.cells.size(), 4u);
  for (const GridCell& cell : plan.cells) {
    std::vector<RunRecord> finals;
    for (int r = 0; r < plan.repeats; ++r) {
      finals.push_back(
          ReadRecordsCsv(RunDirectory(plan, cell, r) / kRecordsFile).back());
    }
    const CellSummary& s = analysis.cells[cell.index];
    EXPECT_EQ(s.runs, 2);
    EXPECT_EQ(s.final_loss_mean, (finals[0].loss_avg + finals[1].loss_avg) / 2);
    EXPECT_EQ(s.final_grad_norm_sq_mean,
              (finals[0].grad_norm_sq_avg + finals[1].grad_norm_sq_avg) / 2);
    EXPECT_EQ(*s.final_acc_mean, (*finals[0].test_acc + *finals[1].test_acc) / 2);
    EXPECT_EQ(s.bits_cum_mean,
              (double(finals[0].bits_cum) + double(finals[1].bits_cum)) / 2);
    // Distinct seeds give distinct trajectories.
    EXPECT_GT(s.final_loss_std, 0.0);
    const double m = s.final_loss_mean;
    EXPECT_NEAR(s.final_loss_std,
                std::sqrt((finals[0].loss_avg - m) * (finals[0].loss_avg - m) +
                          (finals[1].loss_avg - m) * (finals[1].loss_avg - m)),
                1e-15);
  }

  // Paired cells: rand_0.5 sends 3 of 6 floats, both add the push-sum weight.
  const double ratio =
      analysis.cells[1].bits_cum_mean / analysis.cells[0].bits_cum_mean;
  EXPECT_DOUBLE_EQ(ratio, (3.0 * 32 + 32) / (6.0 * 32 + 32));

  // Rerunning from scratch reproduces every byte.
  std::map<fs::path, std::string> snapshot;
  for (const auto& entry : fs::recursive_directory_iterator(plan.out_dir)) {
    if (entry.is_regular_file()) snapshot[entry.path()] = ReadFile(entry.path());
  }
  fs::remove_all(plan.out_dir);
  RunGrid(plan);
  for (const auto& [path, bytes] : snapshot) {
    EXPECT_EQ(ReadFile(path), bytes) << path;
  }

  // Resuming the finished grid runs nothing and leaves outputs untouched.
  const std::string summary = ReadFile(plan.out_dir / "summary.csv");
  const GridOutcome again = RunGrid(plan);
  EXPECT_EQ(again.executed, 0);
  EXPECT_EQ(again.skipped, 8);
  EXPECT_EQ(ReadFile(plan.out_dir / "summary.csv"), summary);
}

TEST(GridTest, ResumeRerunsOnlyMissingRuns) {
  TempDir dir("grid_resume");
  ExperimentConfig c = ParseConfig(kSmallGrid);
  c.grid.epsilons = {0.5};
  c.grid.compressors = {"identity"};
  c.grid.out_dir = dir.path();
  const GridPlan plan = ExpandGrid(c);
  RunGrid(plan);
  const fs::path victim = RunDirectory(plan, plan.cells[0], 1);
  const std::string before = ReadFile(victim / kRecordsFile);
  fs::remove(victim / kMetadataFile);  // interrupted before completion
  const GridOutcome outcome = RunGrid(plan);
  EXPECT_EQ(outcome.executed, 1);
  EXPECT_EQ(outcome.skipped, 1);
  EXPECT_EQ(ReadFile(victim / kRecordsFile), before);
}

TEST(GridTest, SingleRunSummaryEqualsFinalRecord) {
  TempDir dir("grid_single");
  ExperimentConfig c = ParseConfig(kSmallGrid);
  c.grid.epsilons = {0.5};
  c.grid.compressors = {"identity"};
  c.grid.repeats = 1;
  c.grid.out_dir = dir.path();
  const GridPlan plan = ExpandGrid(c);
  RunGrid(plan);
  const RunRecord last =
      ReadRecordsCsv(RunDirectory(plan, plan.cells[0], 0) / kRecordsFile).back();
  const Analysis a = AnalyzeRuns(dir.path());
  ASSERT_EQ(a.cells.size(), 1u);
  EXPECT_EQ(a.cells[0].final_loss_mean, last.loss_avg);
  EXPECT_EQ(a.cells[0].final_loss_std, 0.0);
  EXPECT_EQ(a.cells[0].final_grad_norm_sq_mean, last.grad_norm_sq_avg);
  EXPECT_EQ(a.cells[0].final_acc_mean, last.test_acc);
  EXPECT_EQ(a.cells[0].bits_cum_mean, double(last.bits_cum));
  // The curve ends at the run's final point.
  const CurvePoint& end = a.curves.back();
  EXPECT_EQ(end.bits, double(last.bits_cum));
  EXPECT_EQ(end.test_acc, last.test_acc);
  EXPECT_EQ(end.loss, last.loss_avg);
  EXPECT_EQ(a.curves.size(), static_cast<std::size_t>(kCurvePoints));
}

TEST(GridTest, FailedRunIsRecordedAndGridContinues) {
  TempDir dir("grid_fail");
  ExperimentConfig c = ParseConfig(kSmallGrid);
  c.grid.epsilons = {0.5};
  c.grid.compressors = {"identity"};
  c.grid.out_dir = dir.path();
  c.eta = 1e4;
  c.clip = false;
  c.privacy.enabled = false;
  c.overflow_guard = 1e3;
  const GridPlan plan = ExpandGrid(c);
  const GridOutcome outcome = RunGrid(plan);
  EXPECT_EQ(outcome.failed, 2);
  const Analysis a = AnalyzeRuns(dir.path());
  ASSERT_EQ(a.cells.size(), 1u);
  EXPECT_EQ(a.cells[0].failed, 2);
  EXPECT_EQ(a.cells[0].runs, 0);
  ASSERT_EQ(a.cells[0].failures.size(), 2u);
  EXPECT_NE(a.cells[0].failures[0].find("guard"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "summary.csv"));
}

TEST(UtilityProbeTest, Guards) {
  std::vector<ProbeRun> single;
  for (int s = 0; s < 5; ++s) single.push_back({4, 0.1, 1.0});
  EXPECT_THROW(UtilityProbe(single), ValidationError);

  std::vector<ProbeRun> few = single;
  for (int s = 0; s < 4; ++s) few.push_back({16, 0.1, 0.5});
  EXPECT_THROW(UtilityProbe(few), ValidationError);

  std::vector<ProbeRun> noiseless = single;
  for (int s = 0; s < 5; ++s) noiseless.push_back({16, 0.0, 0.5});
  EXPECT_THROW(UtilityProbe(noiseless), ValidationError);

  ExperimentConfig c = ParseConfig("[run]\nschedule = theory\n");
  c.privacy.enabled = false;
  const std::vector<int> ns{4, 16};
  EXPECT_THROW(RunUtilityProbe(c, ns), ValidationError);
  c = ParseConfig("[problem]\nkind = logistic\n[run]\nschedule = theory\n");
  EXPECT_THROW(RunUtilityProbe(c, ns), ValidationError);
  c = ParseConfig("");
  EXPECT_THROW(RunUtilityProbe(c, ns), ValidationError);
}

TEST(UtilityProbeTest, RatiosFromSeedMeans) {
  std::vector<ProbeRun> runs;
  for (int s = 0; s < 5; ++s) {
    runs.push_back({16, 0.1, 0.5 + 0.01 * s});
    runs.push_back({4, 0.2, 1.0 + 0.01 * s});
  }
  const UtilityProbeReport r = UtilityProbe(runs);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].n, 4);
  EXPECT_FALSE(r.rows[0].ratio_to_previous.has_value());
  EXPECT_NEAR(*r.rows[1].ratio_to_previous, 0.52 / 1.02, 1e-15);
  EXPECT_TRUE(r.decreasing);
}

TEST(UtilityMetricTest, AveragesGradNorms) {
  std::vector<RunRecord> records(4);
  for (int t = 0; t < 4; ++t) records[t].grad_norm_sq_avg = t;
  EXPECT_EQ(UtilityMetric(records), 1.5);
}

}  // namespace
}  // namespace pushsim
