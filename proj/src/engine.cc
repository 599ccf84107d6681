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

#include "pushsim/engine.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pushsim/error.h"
#include "pushsim/rng.h"

namespace pushsim {
namespace {

Vector Mean(const std::vector<NodeState>& nodes) {
  const std::size_t d = nodes.front().x.size();
  Vector mean(d, 0.0);
  for (const NodeState& node : nodes) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += node.x[k];
  }
  const double inv_n = 1.0 / static_cast<double>(nodes.size());
  for (double& e : mean) e *= inv_n;
  return mean;
}

}  // namespace

Algorithm ParseAlgorithm(std::string_view name) {
  if (name == "dp-csgp") return Algorithm::kDpCsgp;
  if (name == "exact-sgp-baseline") return Algorithm::kExactSgpBaseline;
  throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kDpCsgp:
      return "dp-csgp";
    case Algorithm::kExactSgpBaseline:
      return "exact-sgp-baseline";
  }
  return "unknown";
}

EngineConfig ResolveConfig(EngineConfig config) {
  if (!(config.eta > 0.0)) throw ValidationError("run.eta must be positive");
  if (config.T < 1) throw ValidationError("run.T must be >= 1");
  if (!config.mixing) throw ValidationError("config has no mixing matrix");
  if (!config.problem) throw ValidationError("config has no problem");
  if (config.problem->nodes() != config.mixing->size()) {
    throw ValidationError("problem is split over " +
                          std::to_string(config.problem->nodes()) +
                          " nodes but the graph has " +
                          std::to_string(config.mixing->size()));
  }
  if (!(config.overflow_guard > 0.0)) {
    throw ValidationError("run.overflow_guard must be positive");
  }

  const std::size_t d = config.problem->dimension();
  if (config.algorithm == Algorithm::kExactSgpBaseline) {
    config.compressor =
        CompressorSpec::Identity(d, config.compressor.float_width);
  }
  if (config.compressor.d == 0) config.compressor.d = d;
  if (config.compressor.d != d) {
    throw ValidationError("compressor dimension " +
                          std::to_string(config.compressor.d) +
                          " does not match model dimension " +
                          std::to_string(d));
  }
  ValidateCompressor(config.compressor);

  config.privacy.T = config.T;
  config.privacy.J = static_cast<std::int64_t>(config.problem->samples_per_node());
  config.privacy.d = d;
  if (config.privacy.enabled || config.clip) {
    if (!(config.privacy.clip_G > 0.0)) {
      throw ValidationError("privacy.clip_G must be positive");
    }
  }
  EffectiveSigmaSq(config.privacy);  // validates epsilon / delta when enabled

  if (config.initial_x) {
    if (config.initial_x->size() !=
        static_cast<std::size_t>(config.mixing->size())) {
      throw ValidationError("initial_x needs one vector per node");
    }
    for (const Vector& x : *config.initial_x) {
      if (x.size() != d) throw ValidationError("initial_x has wrong dimension");
    }
  }
  return config;
}

Simulation::Simulation(EngineConfig config)
    : config_(ResolveConfig(std::move(config))),
      compressor_(config_.compressor),
      sigma_sq_(EffectiveSigmaSq(config_.privacy)) {
  if (!config_.constants) {
    try {
      config_.constants = EstimateConstants(*config_.mixing);
    } catch (const ConvergenceError&) {
      if (!config_.allow_inadmissible_omega) {
        throw ValidationError(
            "cannot verify compression admissibility: spectral constants did "
            "not converge");
      }
    }
  }
  if (!config_.allow_inadmissible_omega) {
    const OmegaCheck check = CheckOmegaAdmissible(compressor_, *config_.constants);
    if (!check.ok) {
      std::ostringstream os;
      os << compressor_.Label() << " is not admissible on this graph (rho = "
         << check.rho << " > threshold " << check.threshold
         << "); set run.allow_inadmissible_omega to run anyway";
      throw ValidationError(os.str());
    }
  }

  const int n = config_.mixing->size();
  const std::size_t d = compressor_.d;
  nodes_.resize(n);
  for (int i = 0; i < n; ++i) {
    NodeState& node = nodes_[i];
    node.x = config_.initial_x ? (*config_.initial_x)[i] : Vector(d, 0.0);
    node.y = 1.0;
    node.z = node.x;
    node.xhat_self.assign(d, 0.0);
    for (int j : config_.mixing->graph().in_neighbors(i)) {
      if (j != i) node.xhat_in.emplace(j, Vector(d, 0.0));
    }
  }
  grads_.assign(n, Vector(d, 0.0));
  noise_.assign(n, Vector(d, 0.0));
}

Vector Simulation::AverageModel() const { return Mean(nodes_); }

RunRecord Simulation::Step() {
  const MixingMatrix& a = *config_.mixing;
  const DirectedGraph& graph = a.graph();
  const Problem& problem = *config_.problem;
  const int n = a.size();
  const std::size_t d = compressor_.d;
  const std::uint64_t t = static_cast<std::uint64_t>(t_);

  const Vector mean_before = Mean(nodes_);

  // Compress x_i - xhat_i and charge every true out-edge for (q_i, y_i).
  std::vector<Vector> q(n);
  Vector diff(d);
  for (int i = 0; i < n; ++i) {
    const NodeState& node = nodes_[i];
    for (std::size_t k = 0; k < d; ++k) diff[k] = node.x[k] - node.xhat_self[k];
    Rng rng = MakeStream(config_.seed, i, StreamPurpose::kCompression, t);
    CompressedMessage msg = Compress(compressor_, diff, rng);
    const std::int64_t edges = graph.out_degree(i) - 1;
    bits_cum_ += edges * (msg.bits + compressor_.float_width);
    bits_paper_cum_ +=
        edges * (msg.bits_paper_convention + compressor_.float_width);
    q[i] = std::move(msg.payload);
  }

  // xhat^{t+1} = xhat^t + q, on the owner and on every replica.
  for (int i = 0; i < n; ++i) {
    NodeState& node = nodes_[i];
    for (std::size_t k = 0; k < d; ++k) node.xhat_self[k] += q[i][k];
    for (auto& [j, replica] : node.xhat_in) {
      for (std::size_t k = 0; k < d; ++k) replica[k] += q[j][k];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, replica] : nodes_[i].xhat_in) {
      if (replica != nodes_[j].xhat_self) {
        throw ReplicaConsistencyError(
            "node " + std::to_string(i) + " holds a stale copy of x-hat_" +
            std::to_string(j) + " at t = " + std::to_string(t_));
      }
    }
  }

  double u_t = 0.0;
  for (const NodeState& node : nodes_) {
    u_t += SquaredDistance(node.x, node.xhat_self);
  }

  // Mixing. Every node reads its neighbors' pre-step y, and the fixed
  // summation order (ascending neighbor id, accumulator starting at 0) is
  // shared with the matrix oracle.
  std::vector<Vector> w(n, Vector(d));
  Vector y_next(n);
  for (int i = 0; i < n; ++i) {
    const NodeState& node = nodes_[i];
    Vector acc(d, 0.0);
    double y_acc = 0.0;
    for (int j : graph.in_neighbors(i)) {
      const double weight = a(i, j);
      const Vector& xhat_j = j == i ? node.xhat_self : node.xhat_in.at(j);
      for (std::size_t k = 0; k < d; ++k) acc[k] += weight * xhat_j[k];
      y_acc += weight * nodes_[j].y;
    }
    for (std::size_t k = 0; k < d; ++k) {
      w[i][k] = (node.x[k] - node.xhat_self[k]) + acc[k];
    }
    y_next[i] = y_acc;
  }

  // De-bias, then a private local SGD step at z_i.
  double consensus = 0.0;
  double min_weight = y_next.empty() ? 0.0 : y_next.front();
  for (int i = 0; i < n; ++i) {
    NodeState& node = nodes_[i];
    node.y = y_next[i];
    min_weight = std::min(min_weight, node.y);
    if (!(node.y > 0.0)) {
      throw RuntimeFailure("push-sum weight of node " + std::to_string(i) +
                           " is not positive at t = " + std::to_string(t_));
    }
    for (std::size_t k = 0; k < d; ++k) node.z[k] = w[i][k] / node.y;
    consensus = std::max(consensus, SquaredDistance(node.z, mean_before));

    const LocalDataset& local = problem.locals[i];
    Rng sample_rng = MakeStream(config_.seed, i, StreamPurpose::kSampling, t);
    const Sample& sample = local.samples[SampleIndex(local.J(), sample_rng)];
    problem.objective->Gradient(node.z, sample, grads_[i]);
    if (config_.clip) ClipGradientInPlace(grads_[i], config_.privacy.clip_G);
    Rng noise_rng = MakeStream(config_.seed, i, StreamPurpose::kNoise, t);
    noise_[i] = DrawNoise(sigma_sq_, d, noise_rng);

    for (std::size_t k = 0; k < d; ++k) {
      node.x[k] = w[i][k] - config_.eta * (grads_[i][k] + noise_[i][k]);
    }
    const double norm = Norm(node.x);
    if (!std::isfinite(norm) || norm > config_.overflow_guard) {
      throw DivergenceError("||x_" + std::to_string(i) + "|| = " +
                            std::to_string(norm) + " exceeds the guard at t = " +
                            std::to_string(t_));
    }
  }

  // Simulator-side diagnostics; nothing below is visible to the nodes.
  const Vector mean_after = Mean(nodes_);
  Vector residual(d);
  Vector pushed(d, 0.0);
  double xhat_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) pushed[k] += grads_[i][k] + noise_[i][k];
    xhat_scale += Norm(nodes_[i].xhat_self);
  }
  const double step_scale = config_.eta / n;
  for (std::size_t k = 0; k < d; ++k) {
    residual[k] = mean_after[k] - mean_before[k] + step_scale * pushed[k];
  }
  const double scale = std::max({Norm(mean_before), Norm(mean_after),
                                 step_scale * Norm(pushed), xhat_scale / n});
  diag_.average_identity_residual = scale > 0.0 ? Norm(residual) / scale : 0.0;
  diag_.weight_sum = 0.0;
  for (const NodeState& node : nodes_) diag_.weight_sum += node.y;
  diag_.min_weight = min_weight;

  RunRecord record;
  record.t = t_;
  record.grad_norm_sq_avg = SquaredNorm(problem.FullGradient(mean_after));
  record.consensus_err = consensus;
  record.U_t = u_t;
  record.bits_cum = bits_cum_;
  record.bits_paper_convention = bits_paper_cum_;
  record.loss_avg = problem.FullLoss(mean_after);
  record.test_acc = problem.TestAccuracy(mean_after);
  ++t_;
  return record;
}

RunResult Run(const EngineConfig& config) {
  Simulation sim(config);
  const EngineConfig& resolved = sim.config();
  const int n = resolved.mixing->size();

  RunResult result;
  RunMetadata& meta = result.metadata;
  meta.sigma_sq = sim.sigma_sq();
  meta.private_run = resolved.privacy.enabled;
  meta.budget = CheckBudgetAdmissible(resolved.privacy);
  meta.omega_sq = OmegaSq(sim.compressor());
  meta.constants = resolved.constants;
  if (resolved.constants) {
    meta.omega = CheckOmegaAdmissible(meta.omega_sq, *resolved.constants);
  }
  meta.min_weight = 1.0;

  result.records.reserve(static_cast<std::size_t>(resolved.T));
  for (std::int64_t step = 0; step < resolved.T; ++step) {
    try {
      result.records.push_back(sim.Step());
    } catch (const RuntimeFailure& e) {
      meta.failure = e.what();
      meta.failed_at = sim.iteration();
      break;
    }
    const StepDiagnostics& diag = sim.last_diagnostics();
    meta.max_weight_sum_error = std::max(
        meta.max_weight_sum_error, std::abs(diag.weight_sum - n) / n);
    meta.min_weight = std::min(meta.min_weight, diag.min_weight);
    meta.max_average_identity_residual = std::max(
        meta.max_average_identity_residual, diag.average_identity_residual);
  }
  return result;
}

RunResult BaselineExactSgp(EngineConfig config) {
  config.algorithm = Algorithm::kExactSgpBaseline;
  return Run(config);
}

ErrorFeedbackReport ErrorFeedbackDiagnostic(const RunResult& result,
                                            const EngineConfig& config) {
  const RunMetadata& meta = result.metadata;
  if (!meta.constants || !meta.omega) {
    throw ValidationError("error-feedback bound needs spectral constants");
  }
  if (!meta.omega->ok) {
    throw ValidationError("error-feedback bound assumes an admissible omega");
  }
  if (!config.clip) {
    throw ValidationError("error-feedback bound assumes clipped gradients");
  }
  ErrorFeedbackInputs in;
  in.rho = meta.omega->rho;
  in.n = config.mixing->size();
  in.G = config.privacy.clip_G;
  in.d = config.problem->dimension();
  in.sigma_sq = meta.sigma_sq;
  in.C = meta.constants->C;
  in.lambda = meta.constants->lambda;
  in.eta = config.eta;
  return ErrorFeedbackDiagnostic(result.records, in);
}

}  // namespace pushsim
