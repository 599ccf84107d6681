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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pushsim/error.h"

namespace pushsim {

double SigmaSq(const PrivacySpec& spec) {
  if (!(spec.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) {
    throw ValidationError("delta must lie in (0, 1)");
  }
  if (spec.J < 1) throw ValidationError("J must be >= 1");
  if (spec.T < 1) throw ValidationError("T must be >= 1");
  if (!(spec.clip_G > 0.0)) throw ValidationError("clip_G must be positive");
  if (!(spec.c2 > 0.0)) throw ValidationError("c2 must be positive");

  const double j = static_cast<double>(spec.J);
  return static_cast<double>(spec.T) * spec.c2 * spec.c2 * spec.clip_G *
         spec.clip_G * std::log(1.0 / spec.delta) /
         (j * j * spec.epsilon * spec.epsilon);
}

double EffectiveSigmaSq(const PrivacySpec& spec) {
  return spec.enabled ? SigmaSq(spec) : 0.0;
}

BudgetCheck CheckBudgetAdmissible(const PrivacySpec& spec) {
  BudgetCheck check;
  const double j = static_cast<double>(spec.J);
  check.bound = spec.c1 * static_cast<double>(spec.T) / (j * j);
  if (!(spec.epsilon < check.bound)) {
    check.ok = false;
    std::ostringstream os;
    os << "epsilon = " << spec.epsilon << " is not below c1*T/J^2 = "
       << check.bound << "; the noise calibration is outside its proven range";
    check.reason = os.str();
  }
  return check;
}

void ClipGradientInPlace(std::span<double> g, double G) {
  if (!(G > 0.0)) throw ValidationError("clipping bound must be positive");
  const double norm = Norm(g);
  if (norm <= G) return;
  // Shrink the factor by ulps until the rounded result is within G, so the
  // output obeys the bound exactly and clipping it again is a no-op.
  double scale = G / norm;
  Vector scaled(g.size());
  for (;;) {
    for (std::size_t k = 0; k < g.size(); ++k) scaled[k] = g[k] * scale;
    if (Norm(scaled) <= G) break;
    scale = std::nextafter(scale, 0.0);
  }
  std::copy(scaled.begin(), scaled.end(), g.begin());
}

Vector ClipGradient(std::span<const double> g, double G) {
  Vector out(g.begin(), g.end());
  ClipGradientInPlace(out, G);
  return out;
}

Vector DrawNoise(double sigma_sq, std::size_t d, Rng& rng) {
  if (!(sigma_sq >= 0.0)) throw ValidationError("sigma_sq must be >= 0");
  Vector out(d, 0.0);
  if (sigma_sq == 0.0) return out;
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma_sq));
  for (double& e : out) e = normal(rng);
  return out;
}

}  // namespace pushsim
