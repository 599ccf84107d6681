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

// Command-line front end: single runs, grids, schedules, analysis and graph
// constants. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pushsim/config.h"
#include "pushsim/diagnostics.h"
#include "pushsim/engine.h"
#include "pushsim/error.h"
#include "pushsim/grid.h"
#include "pushsim/privacy.h"
#include "pushsim/records.h"
#include "pushsim/schedule.h"

namespace {

using nlohmann::json;
using namespace pushsim;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int CmdRun(const std::string& config_path, std::optional<std::uint64_t> seed,
           const std::string& out_dir) {
  ExperimentConfig config = LoadConfig(config_path);
  if (seed) config.seed = *seed;
  const PreparedRun prepared = Prepare(config);
  const RunResult result = Run(prepared.engine);
  WriteRunOutputs(out_dir, result.records, RunSidecar(config, prepared, result));
  if (!result.ok()) {
    std::cerr << "run failed at t = " << result.metadata.failed_at << ": "
              << *result.metadata.failure << '\n';
    return kExitRuntime;
  }
  const RunRecord& last = result.records.back();
  std::cout << "T=" << last.t << " loss=" << FormatDouble(last.loss_avg)
            << " grad_norm_sq=" << FormatDouble(last.grad_norm_sq_avg)
            << " bits=" << last.bits_cum;
  if (last.test_acc) std::cout << " test_acc=" << FormatDouble(*last.test_acc);
  std::cout << "\nwrote " << out_dir << '\n';
  return kExitOk;
}

int CmdGrid(const std::string& config_path) {
  const ExperimentConfig config = LoadConfig(config_path);
  const GridPlan plan = ExpandGrid(config);
  std::cout << plan.cells.size() << " cells x " << plan.repeats
            << " seeds -> " << plan.out_dir.string() << '\n';
  const GridOutcome outcome = RunGrid(plan, &std::cout);
  std::cout << "runs " << outcome.runs << ", executed " << outcome.executed
            << ", skipped " << outcome.skipped << ", failed "
            << outcome.failed << '\n';
  return kExitOk;
}

int CmdSchedule(const ScheduleInputs& in) {
  std::cout << ToJson(TheoreticalSchedule(in)).dump(2) << '\n';
  return kExitOk;
}

int CmdAnalyze(const std::string& in_dir, const std::string& out_path) {
  const Analysis analysis = AnalyzeDirectory(in_dir, out_path);
  std::cout << analysis.cells.size() << " cells summarized into " << out_path
            << '\n';
  return kExitOk;
}

int CmdConstants(const std::string& config_path) {
  const ExperimentConfig config = LoadConfig(config_path);
  const PreparedRun prepared = Prepare(config);
  const EngineConfig& e = prepared.engine;
  json out;
  out["constants"] = ToJson(*e.constants);
  out["omega"] = ToJson(CheckOmegaAdmissible(e.compressor, *e.constants));
  out["compressor"] = e.compressor.Label();
  if (e.privacy.enabled) {
    out["sigma_sq"] = SigmaSq(e.privacy);
    out["budget"] = ToJson(CheckBudgetAdmissible(e.privacy));
  } else {
    out["sigma_sq"] = 0.0;
    out["budget"] = nullptr;
  }
  ScheduleInputs in;
  in.epsilon = e.privacy.epsilon;
  in.delta = e.privacy.delta;
  in.J = e.privacy.J;
  in.n = e.mixing->size();
  in.d = e.problem->dimension();
  in.c1 = e.privacy.c1;
  in.c2 = e.privacy.c2;
  in.L = e.problem->objective->smoothness();
  in.G = e.privacy.clip_G;
  const Schedule schedule = TheoreticalSchedule(in);
  out["j_condition"] = {{"ok", schedule.j_condition},
                        {"required", schedule.j_required},
                        {"J", in.J}};
  out["theory_schedule"] = ToJson(schedule);
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for private compressed push-sum SGD"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run_out", in_dir, summary_path;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run one configuration");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--out", out_dir, "Output directory");

  auto* grid = app.add_subcommand("grid", "Run a seed-replicated grid");
  grid->add_option("--config", config_path, "Config file")->required();

  ScheduleInputs sched;
  auto* schedule = app.add_subcommand("schedule", "Theoretical T and eta");
  schedule->add_option("--epsilon", sched.epsilon)->required();
  schedule->add_option("--delta", sched.delta)->required();
  schedule->add_option("--J", sched.J)->required();
  schedule->add_option("--n", sched.n)->required();
  schedule->add_option("--d", sched.d)->required();
  schedule->add_option("--c2", sched.c2)->required();
  schedule->add_option("--L", sched.L)->required();
  schedule->add_option("--G", sched.G, "Clipping bound");
  schedule->add_option("--c1", sched.c1);

  auto* analyze = app.add_subcommand("analyze", "Summarize a run directory");
  analyze->add_option("--in", in_dir)->required();
  analyze->add_option("--out", summary_path)->required();

  auto* constants =
      app.add_subcommand("constants", "Graph constants and admissibility");
  constants->add_option("--config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*run) return CmdRun(config_path, seed, out_dir);
    if (*grid) return CmdGrid(config_path);
    if (*schedule) return CmdSchedule(sched);
    if (*analyze) return CmdAnalyze(in_dir, summary_path);
    if (*constants) return CmdConstants(config_path);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
