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

#ifndef PUSHSIM_ENGINE_H_
#define PUSHSIM_ENGINE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pushsim/compression.h"
#include "pushsim/diagnostics.h"
#include "pushsim/privacy.h"
#include "pushsim/problems.h"
#include "pushsim/topology.h"
#include "pushsim/vec.h"

namespace pushsim {

enum class Algorithm { kDpCsgp, kExactSgpBaseline };

Algorithm ParseAlgorithm(std::string_view name);
std::string_view AlgorithmName(Algorithm algorithm);

struct EngineConfig {
  double eta = 0.01;
  std::int64_t T = 100;
  Algorithm algorithm = Algorithm::kDpCsgp;
  std::uint64_t seed = 1;

  std::shared_ptr<const MixingMatrix> mixing;
  std::shared_ptr<const Problem> problem;
  CompressorSpec compressor;
  // T, J and d are overwritten from the run itself; epsilon, delta, clip_G,
  // c1, c2 and enabled are taken as given.
  PrivacySpec privacy;

  // Per-sample gradient clipping at privacy.clip_G.
  bool clip = true;
  double overflow_guard = 1e12;
  // Run even if omega fails the admissibility condition.
  bool allow_inadmissible_omega = false;
  // Estimated on demand when absent.
  std::optional<SpectralConstants> constants;
  // Test mode: nonzero starting models (x-hat still starts at 0).
  std::optional<std::vector<Vector>> initial_x;
};

// Resolves the privacy spec against the run (T, J, d) and validates the
// config. Throws ValidationError.
EngineConfig ResolveConfig(EngineConfig config);

// Everything node i holds. xhat_in keeps node i's replica of x-hat_j for each
// in-neighbor j != i; its own estimate lives in xhat_self.
struct NodeState {
  Vector x;
  double y = 1.0;
  Vector z;
  Vector xhat_self;
  std::map<int, Vector> xhat_in;
};

// Metrics after iteration t, i.e. describing x-bar^{t+1} = mean_i x_i^{t+1}.
struct RunRecord {
  std::int64_t t = 0;
  double grad_norm_sq_avg = 0.0;  // ||grad f(x-bar^{t+1})||^2
  double consensus_err = 0.0;     // max_i ||z_i^{t+1} - x-bar^t||^2
  double U_t = 0.0;               // ||X^t - X-hat^{t+1}||_F^2
  std::int64_t bits_cum = 0;
  std::int64_t bits_paper_convention = 0;
  double loss_avg = 0.0;  // f(x-bar^{t+1})
  std::optional<double> test_acc;
};

struct StepDiagnostics {
  double weight_sum = 0.0;  // sum_i y_i after the step
  double min_weight = 0.0;
  // ||x-bar^{t+1} - x-bar^t + eta/n sum_i (g_i + N_i)|| relative to the
  // magnitude of the quantities involved.
  double average_identity_residual = 0.0;
};

// Synchronous simulation of the compressed private push-sum network.
class Simulation {
 public:
  explicit Simulation(EngineConfig config);

  // Executes iteration t = iteration() and advances it.
  // Throws DivergenceError, ReplicaConsistencyError or RuntimeFailure.
  RunRecord Step();

  std::int64_t iteration() const { return t_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  const EngineConfig& config() const { return config_; }
  const CompressorSpec& compressor() const { return compressor_; }
  double sigma_sq() const { return sigma_sq_; }
  const StepDiagnostics& last_diagnostics() const { return diag_; }
  // Clipped stochastic gradient and noise each node applied last step.
  const std::vector<Vector>& last_gradients() const { return grads_; }
  const std::vector<Vector>& last_noise() const { return noise_; }

  Vector AverageModel() const;

 private:
  EngineConfig config_;
  CompressorSpec compressor_;
  double sigma_sq_ = 0.0;
  std::int64_t t_ = 1;
  std::int64_t bits_cum_ = 0;
  std::int64_t bits_paper_cum_ = 0;
  std::vector<NodeState> nodes_;
  std::vector<Vector> grads_;
  std::vector<Vector> noise_;
  StepDiagnostics diag_;
};

struct RunMetadata {
  double sigma_sq = 0.0;
  bool private_run = true;
  BudgetCheck budget;
  double omega_sq = 0.0;
  std::optional<SpectralConstants> constants;
  std::optional<OmegaCheck> omega;
  double max_weight_sum_error = 0.0;  // max_t |sum_i y_i - n| / n
  double min_weight = 0.0;
  double max_average_identity_residual = 0.0;
  std::optional<std::string> failure;
  std::int64_t failed_at = 0;
};

struct RunResult {
  std::vector<RunRecord> records;
  RunMetadata metadata;
  bool ok() const { return !metadata.failure.has_value(); }
};

// Runs T iterations. Invalid configs throw ValidationError; failures while
// running stop the run and are reported in metadata with the records so far.
RunResult Run(const EngineConfig& config);

// Exact-communication private push-sum baseline: Run() with the identity
// compressor.
RunResult BaselineExactSgp(EngineConfig config);

// Convenience wrapper over ErrorFeedbackDiagnostic using the run's own
// constants, sigma^2, clip bound and step size. Throws ValidationError when
// the run lacks what the bound assumes (constants, admissible omega,
// clipping).
ErrorFeedbackReport ErrorFeedbackDiagnostic(const RunResult& result,
                                            const EngineConfig& config);

}  // namespace pushsim

#endif  // PUSHSIM_ENGINE_H_
