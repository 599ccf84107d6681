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

#include "pushsim/privacy.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "pushsim/error.h"
#include "pushsim/rng.h"
#include "pushsim/vec.h"

namespace pushsim {
namespace {

PrivacySpec Spec(std::int64_t T, double c2, double G, double delta,
                 std::int64_t J, double epsilon) {
  PrivacySpec s;
  s.T = T;
  s.c2 = c2;
  s.clip_G = G;
  s.delta = delta;
  s.J = J;
  s.epsilon = epsilon;
  return s;
}

TEST(SigmaSqTest, WorkedValue) {
  // 100 * 1.5^2 * ln(1e4) / (1000^2 * 0.5^2) = 225 ln(1e4) / 250000.
  const double expected = 225.0 * std::log(1e4) / 250000.0;
  const double got = SigmaSq(Spec(100, 1.0, 1.5, 1e-4, 1000, 0.5));
  EXPECT_NEAR(got, expected, 1e-15);
  EXPECT_NEAR(got, 0.0082893, 5e-8);
}

TEST(SigmaSqTest, AllFactorsOne) {
  EXPECT_NEAR(SigmaSq(Spec(1, 1.0, 1.0, std::exp(-1.0), 1, 1.0)), 1.0, 1e-15);
}

TEST(SigmaSqTest, ScalesInverselyWithJSquaredAndEpsilonSquared) {
  const PrivacySpec base = Spec(50, 1.3, 2.0, 1e-5, 40, 0.7);
  PrivacySpec doubled_j = base;
  doubled_j.J = 80;
  EXPECT_NEAR(SigmaSq(doubled_j), SigmaSq(base) / 4.0, 1e-15);
  PrivacySpec doubled_t = base;
  doubled_t.T = 100;
  EXPECT_NEAR(SigmaSq(doubled_t), 2.0 * SigmaSq(base), 1e-14);
  PrivacySpec halved_eps = base;
  halved_eps.epsilon = 0.35;
  EXPECT_NEAR(SigmaSq(halved_eps), 4.0 * SigmaSq(base), 1e-13);
}

TEST(SigmaSqTest, RejectsInvalidSpecs) {
  EXPECT_THROW(SigmaSq(Spec(0, 1, 1, 0.1, 1, 1)), ValidationError);
  EXPECT_THROW(SigmaSq(Spec(1, 1, 1, 0.0, 1, 1)), ValidationError);
  EXPECT_THROW(SigmaSq(Spec(1, 1, 1, 1.0, 1, 1)), ValidationError);
  EXPECT_THROW(SigmaSq(Spec(1, 1, 1, 0.1, 0, 1)), ValidationError);
  EXPECT_THROW(SigmaSq(Spec(1, 1, 1, 0.1, 1, 0.0)), ValidationError);
  EXPECT_THROW(SigmaSq(Spec(1, 1, 1, 0.1, 1, -2.0)), ValidationError);
}

TEST(SigmaSqTest, DisabledPrivacyInjectsNothing) {
  PrivacySpec s = Spec(10, 1, 1, 0.1, 5, 1);
  s.enabled = false;
  EXPECT_EQ(EffectiveSigmaSq(s), 0.0);
  s.enabled = true;
  EXPECT_GT(EffectiveSigmaSq(s), 0.0);
}

TEST(BudgetTest, WarnsOutsideProvenRange) {
  PrivacySpec s = Spec(100, 1, 1, 1e-4, 1000, 0.5);
  BudgetCheck check = CheckBudgetAdmissible(s);
  EXPECT_FALSE(check.ok);
  EXPECT_DOUBLE_EQ(check.bound, 1e-4);
  EXPECT_FALSE(check.reason.empty());

  s = Spec(1000000, 1, 1, 1e-4, 100, 0.5);
  check = CheckBudgetAdmissible(s);
  EXPECT_TRUE(check.ok);
  EXPECT_DOUBLE_EQ(check.bound, 100.0);
  EXPECT_TRUE(check.reason.empty());

  // T >= J^2 makes the bound at least c1 = 1.
  s = Spec(400, 1, 1, 1e-4, 20, 1e-9);
  EXPECT_TRUE(CheckBudgetAdmissible(s).ok);
}

TEST(ClipTest, Examples) {
  EXPECT_EQ(ClipGradient(Vector{3.0, 4.0}, 2.5), (Vector{1.5, 2.0}));
  const Vector g{1.0, 2.0, 2.0};  // norm 3
  const Vector clipped = ClipGradient(g, 1.5);
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(clipped[k], g[k] / 2.0);
  const Vector small{0.6, 0.8};  // norm 1
  EXPECT_EQ(ClipGradient(small, 1.5), small);
  EXPECT_EQ(ClipGradient(Vector{0.0, 0.0}, 1.0), (Vector{0.0, 0.0}));
  EXPECT_THROW(ClipGradient(small, 0.0), ValidationError);
}

TEST(ClipTest, NormBoundedAndIdempotentOnRandomInputs) {
  Rng rng = MakeSeededRng(21);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 2000; ++trial) {
    Vector g(1 + trial % 13);
    const double s = scale(rng);
    for (double& e : g) e = s * normal(rng);
    const double G = scale(rng) / 10.0;
    const Vector once = ClipGradient(g, G);
    EXPECT_LE(Norm(once), G);
    EXPECT_EQ(ClipGradient(once, G), once);
    if (Norm(g) <= G) EXPECT_EQ(once, g);
    // Direction is preserved.
    const double ratio = once[0] / g[0];
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] != 0.0) EXPECT_NEAR(once[k] / g[k], ratio, 1e-12 * ratio);
    }
  }
}

TEST(NoiseTest, ZeroVarianceConsumesNoRandomness) {
  Rng a = MakeSeededRng(22);
  Rng b = MakeSeededRng(22);
  EXPECT_EQ(DrawNoise(0.0, 5, a), Vector(5, 0.0));
  EXPECT_EQ(a(), b());
}

TEST(NoiseTest, SampleVarianceMatches) {
  Rng rng = MakeSeededRng(23);
  const Vector noise = DrawNoise(4.0, 100000, rng);
  double mean = 0.0;
  for (const double e : noise) mean += e;
  mean /= noise.size();
  double var = 0.0;
  for (const double e : noise) var += (e - mean) * (e - mean);
  var /= noise.size() - 1;
  EXPECT_GE(var, 3.9);
  EXPECT_LE(var, 4.1);
  EXPECT_NEAR(mean, 0.0, 0.03);
}

TEST(NoiseTest, ReplayIsIdentical) {
  Rng a = MakeStream(5, 1, StreamPurpose::kNoise, 3);
  Rng b = MakeStream(5, 1, StreamPurpose::kNoise, 3);
  EXPECT_EQ(DrawNoise(0.3, 17, a), DrawNoise(0.3, 17, b));
  EXPECT_THROW(DrawNoise(-1.0, 3, a), ValidationError);
}

TEST(StreamTest, StreamsDifferByEveryCoordinate) {
  const auto first = [](Rng r) { return r(); };
  const std::uint64_t base =
      first(MakeStream(1, 0, StreamPurpose::kSampling, 1));
  EXPECT_NE(base, first(MakeStream(2, 0, StreamPurpose::kSampling, 1)));
  EXPECT_NE(base, first(MakeStream(1, 1, StreamPurpose::kSampling, 1)));
  EXPECT_NE(base, first(MakeStream(1, 0, StreamPurpose::kNoise, 1)));
  EXPECT_NE(base, first(MakeStream(1, 0, StreamPurpose::kSampling, 2)));
  EXPECT_EQ(base, first(MakeStream(1, 0, StreamPurpose::kSampling, 1)));
}

}  // namespace
}  // namespace pushsim
