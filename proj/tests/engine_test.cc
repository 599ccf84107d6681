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

#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "pushsim/error.h"
#include "pushsim/rng.h"
#include "pushsim/vec.h"

namespace pushsim {
namespace {

std::shared_ptr<const MixingMatrix> Mixing(GraphKind kind, int n) {
  return std::make_shared<const MixingMatrix>(BuildMixing(BuildGraph(kind, n)));
}

std::shared_ptr<const Problem> Quadratic(int n, std::size_t d, std::int64_t J,
                                         std::uint64_t seed = 1) {
  ProblemSpec spec;
  spec.d = d;
  spec.J = J;
  spec.synth_seed = seed;
  return std::make_shared<const Problem>(MakeProblem(spec, n));
}

EngineConfig BaseConfig(GraphKind kind, int n, std::size_t d, std::int64_t J) {
  EngineConfig c;
  c.mixing = Mixing(kind, n);
  c.problem = Quadratic(n, d, J);
  c.eta = 0.05;
  c.T = 30;
  c.seed = 3;
  c.privacy.epsilon = 0.5;
  c.privacy.delta = 1e-4;
  c.privacy.clip_G = 1.0;
  return c;
}

std::vector<Vector> RandomInit(int n, std::size_t d, std::uint64_t seed) {
  Rng rng = MakeSeededRng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> x(n, Vector(d));
  for (auto& v : x) {
    for (double& e : v) e = normal(rng);
  }
  return x;
}

TEST(EngineConfigTest, RejectsInvalidInputs) {
  EngineConfig c = BaseConfig(GraphKind::kRing, 3, 4, 5);
  c.T = 0;
  EXPECT_THROW(pushsim::Run(c), ValidationError);
  c.T = 5;
  c.eta = 0.0;
  EXPECT_THROW(pushsim::Run(c), ValidationError);
  c.eta = 0.1;
  c.problem = Quadratic(4, 4, 5);
  EXPECT_THROW(pushsim::Run(c), ValidationError);
  c.problem = Quadratic(3, 4, 5);
  c.compressor = CompressorSpec::Identity(5);
  EXPECT_THROW(pushsim::Run(c), ValidationError);
  c.compressor = CompressorSpec::Identity(4);
  c.initial_x = std::vector<Vector>(2, Vector(4, 0.0));
  EXPECT_THROW(pushsim::Run(c), ValidationError);
  c.initial_x.reset();
  c.privacy.delta = 1.5;
  EXPECT_THROW(pushsim::Run(c), ValidationError);
}

TEST(EngineConfigTest, ResolvesPrivacyFromRun) {
  EngineConfig c = BaseConfig(GraphKind::kRing, 3, 4, 25);
  c.T = 40;
  const EngineConfig r = ResolveConfig(c);
  EXPECT_EQ(r.privacy.T, 40);
  EXPECT_EQ(r.privacy.J, 25);
  EXPECT_EQ(r.privacy.d, 4u);
  EXPECT_EQ(r.compressor.d, 4u);
}

TEST(EngineConfigTest, InadmissibleCompressionNeedsOverride) {
  EngineConfig c = BaseConfig(GraphKind::kExponential, 10, 10, 5);
  c.compressor = CompressorSpec::Rand(0.5, 10);
  EXPECT_THROW(Simulation{c}, ValidationError);
  c.allow_inadmissible_omega = true;
  const RunResult r = pushsim::Run(c);
  EXPECT_TRUE(r.ok());
  ASSERT_TRUE(r.metadata.omega.has_value());
  EXPECT_FALSE(r.metadata.omega->ok);
}

TEST(EngineTest, SingleNodeIsPlainSgd) {
  EngineConfig c = BaseConfig(GraphKind::kComplete, 1, 5, 20);
  c.privacy.enabled = false;
  c.clip = false;
  c.T = 60;
  c.initial_x = RandomInit(1, 5, 41);
  Simulation sim(c);

  const Problem& p = *c.problem;
  Vector x = (*c.initial_x)[0];
  for (std::int64_t t = 1; t <= c.T; ++t) {
    Rng rng = MakeStream(c.seed, 0, StreamPurpose::kSampling, t);
    const Sample& s = p.locals[0].samples[SampleIndex(20, rng)];
    const Vector g = p.objective->Gradient(x, s);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] -= c.eta * g[k];
    const RunRecord rec = sim.Step();
    EXPECT_EQ(sim.nodes()[0].x, x) << "t=" << t;
    EXPECT_EQ(sim.nodes()[0].y, 1.0);
    EXPECT_EQ(rec.bits_cum, 0);
  }
}

TEST(EngineTest, WeightsAreConservedAndAverageIdentityHolds) {
  for (const CompressorSpec& spec :
       {CompressorSpec::Identity(6), CompressorSpec::Rand(0.5, 6),
        CompressorSpec::Gsgd(8, 6)}) {
    EngineConfig c = BaseConfig(GraphKind::kExponential, 7, 6, 10);
    c.compressor = spec;
    c.allow_inadmissible_omega = true;
    c.initial_x = RandomInit(7, 6, 42);
    c.T = 80;
    Simulation sim(c);
    for (int t = 0; t < c.T; ++t) {
      sim.Step();
      const StepDiagnostics& diag = sim.last_diagnostics();
      EXPECT_NEAR(diag.weight_sum, 7.0, 1e-12 * 7) << spec.Label();
      EXPECT_LE(diag.average_identity_residual, 1e-10) << spec.Label();
      EXPECT_GT(diag.min_weight, 0.0);
    }
  }
}

TEST(EngineTest, AverageIdentityMatchesIndependentRecomputation) {
  // x-bar^{t+1} = x-bar^t - eta/n sum_i (g_i + N_i), recomputed outside the
  // engine from the gradients and noise it reports.
  EngineConfig c = BaseConfig(GraphKind::kRing, 5, 4, 8);
  c.compressor = CompressorSpec::Gsgd(6, 4);
  c.allow_inadmissible_omega = true;
  c.initial_x = RandomInit(5, 4, 43);
  Simulation sim(c);
  for (int t = 0; t < 40; ++t) {
    const Vector before = sim.AverageModel();
    sim.Step();
    const Vector after = sim.AverageModel();
    for (std::size_t k = 0; k < 4; ++k) {
      double pushed = 0.0;
      for (int i = 0; i < 5; ++i) {
        pushed += sim.last_gradients()[i][k] + sim.last_noise()[i][k];
      }
      const double predicted = before[k] - c.eta / 5.0 * pushed;
      EXPECT_NEAR(after[k], predicted,
                  1e-10 * std::max({1.0, std::abs(after[k])}));
    }
  }
}

TEST(EngineTest, ClippedGradientsRespectBound) {
  EngineConfig c = BaseConfig(GraphKind::kExponential, 6, 5, 10);
  c.initial_x = RandomInit(6, 5, 44);
  for (auto& v : *c.initial_x) {
    for (double& e : v) e *= 10.0;
  }
  Simulation sim(c);
  for (int t = 0; t < 10; ++t) {
    sim.Step();
    for (const Vector& g : sim.last_gradients()) {
      EXPECT_LE(Norm(g), c.privacy.clip_G);
    }
  }
}

TEST(EngineTest, IdentityCompressionTracksExactly) {
  EngineConfig c = BaseConfig(GraphKind::kExponential, 10, 6, 10);
  const RunResult r = pushsim::Run(c);
  ASSERT_TRUE(r.ok());
  for (const RunRecord& rec : r.records) EXPECT_LE(rec.U_t, 1e-28);
}

TEST(EngineTest, StationaryWithoutGradientOrNoise) {
  // Every sample sits at the origin, so gradients at 0 vanish.
  auto objective = std::make_shared<QuadraticObjective>(3);
  std::vector<LocalDataset> locals(4);
  for (int i = 0; i < 4; ++i) {
    locals[i].node_id = i;
    locals[i].samples.assign(2, Sample{Vector(3, 0.0), 0.0});
  }
  EngineConfig c;
  c.mixing = Mixing(GraphKind::kRing, 4);
  c.problem =
      std::make_shared<const Problem>(MakeProblemFromLocals(objective, locals));
  c.compressor = CompressorSpec::Gsgd(8, 3);
  c.privacy.enabled = false;
  c.T = 20;
  c.allow_inadmissible_omega = true;
  const RunResult r = pushsim::Run(c);
  for (const RunRecord& rec : r.records) {
    EXPECT_EQ(rec.U_t, 0.0);
    EXPECT_EQ(rec.loss_avg, 0.0);
  }
}

EngineConfig ConvergenceConfig(std::size_t d) {
  // One sample per node makes local gradients exact; with doubly stochastic
  // mixing the average then contracts to the minimizer.
  EngineConfig c = BaseConfig(GraphKind::kExponential, 10, d, 1);
  c.privacy.enabled = false;
  c.clip = false;
  c.eta = 0.1;
  c.T = 500;
  return c;
}

TEST(EngineTest, ExactGradientsConverge) {
  const RunResult r = pushsim::Run(ConvergenceConfig(20));
  ASSERT_TRUE(r.ok());
  EXPECT_LE(r.records.back().grad_norm_sq_avg, 1e-6);
}

TEST(EngineTest, SparsifiedRunMatchesLossAtHalfTheBits) {
  const RunResult exact = pushsim::Run(ConvergenceConfig(100));
  EngineConfig c = ConvergenceConfig(100);
  c.compressor = CompressorSpec::Rand(0.5, 100);
  c.allow_inadmissible_omega = true;
  const RunResult sparse = pushsim::Run(c);
  ASSERT_TRUE(exact.ok());
  ASSERT_TRUE(sparse.ok());
  const double le = exact.records.back().loss_avg;
  const double ls = sparse.records.back().loss_avg;
  EXPECT_NEAR(ls, le, 0.01 * le);
  const double ratio = static_cast<double>(sparse.records.back().bits_cum) /
                       exact.records.back().bits_cum;
  EXPECT_GE(ratio, 0.48);
  EXPECT_LE(ratio, 0.52);
}

TEST(EngineTest, BitsPerRoundCountTrueEdges) {
  EngineConfig c = BaseConfig(GraphKind::kExponential, 10, 100, 2);
  c.T = 3;
  const RunResult r = pushsim::Run(c);
  // 10 nodes x 4 true out-edges x (100 floats + the push-sum weight).
  const std::int64_t per_round = 10 * 4 * (3200 + 32);
  for (const RunRecord& rec : r.records) {
    EXPECT_EQ(rec.bits_cum, per_round * rec.t);
    EXPECT_EQ(rec.bits_paper_convention, per_round * rec.t);
  }
}

TEST(EngineTest, BaselineEqualsIdentityRun) {
  EngineConfig c = BaseConfig(GraphKind::kExponential, 6, 4, 10);
  const RunResult a = pushsim::Run(c);
  c.compressor = CompressorSpec::Gsgd(8, 4);
  const RunResult b = BaselineExactSgp(c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_EQ(a.records[t].loss_avg, b.records[t].loss_avg);
    EXPECT_EQ(a.records[t].consensus_err, b.records[t].consensus_err);
    EXPECT_EQ(a.records[t].bits_cum, b.records[t].bits_cum);
  }
}

TEST(EngineTest, CompleteGraphReachesConsensusImmediately) {
  EngineConfig c = BaseConfig(GraphKind::kComplete, 8, 5, 10);
  c.privacy.enabled = false;
  c.initial_x = RandomInit(8, 5, 45);
  c.T = 5;
  const RunResult r = pushsim::Run(c);
  ASSERT_EQ(r.records.size(), 5u);
  EXPECT_LE(r.records.back().consensus_err, 1e-8);
}

TEST(EngineTest, SeedsControlTheTrajectory) {
  EngineConfig c = BaseConfig(GraphKind::kRing, 4, 3, 10);
  c.compressor = CompressorSpec::Gsgd(8, 3);
  c.allow_inadmissible_omega = true;
  const RunResult a = pushsim::Run(c);
  const RunResult b = pushsim::Run(c);
  c.seed += 1;
  const RunResult other = pushsim::Run(c);
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_EQ(a.records[t].loss_avg, b.records[t].loss_avg);
    EXPECT_EQ(a.records[t].U_t, b.records[t].U_t);
  }
  EXPECT_NE(a.records.back().loss_avg, other.records.back().loss_avg);
}

TEST(EngineTest, DivergenceStopsTheRunWithPartialRecords) {
  EngineConfig c = BaseConfig(GraphKind::kRing, 3, 3, 5);
  c.privacy.enabled = false;
  c.clip = false;
  c.eta = 50.0;
  c.T = 200;
  c.overflow_guard = 1e6;
  c.initial_x = RandomInit(3, 3, 46);
  const RunResult r = pushsim::Run(c);
  EXPECT_FALSE(r.ok());
  EXPECT_GT(r.metadata.failed_at, 0);
  EXPECT_EQ(static_cast<std::int64_t>(r.records.size()),
            r.metadata.failed_at - 1);
}

TEST(EngineTest, RecordsAreSequential) {
  EngineConfig c = BaseConfig(GraphKind::kExponential, 5, 4, 10);
  c.T = 12;
  const RunResult r = pushsim::Run(c);
  ASSERT_EQ(r.records.size(), 12u);
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    EXPECT_EQ(r.records[t].t, static_cast<std::int64_t>(t) + 1);
    if (t > 0) EXPECT_GT(r.records[t].bits_cum, r.records[t - 1].bits_cum);
  }
  EXPECT_GT(r.metadata.sigma_sq, 0.0);
  EXPECT_LE(r.metadata.max_weight_sum_error, 1e-12);
}

}  // namespace
}  // namespace pushsim
