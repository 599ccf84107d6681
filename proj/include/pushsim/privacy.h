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

#ifndef PUSHSIM_PRIVACY_H_
#define PUSHSIM_PRIVACY_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "pushsim/rng.h"
#include "pushsim/vec.h"

namespace pushsim {

// Per-node (epsilon, delta) budget and the quantities that calibrate the
// Gaussian noise injected into every local gradient step.
struct PrivacySpec {
  double epsilon = 1.0;
  double delta = 1e-4;
  double clip_G = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  std::int64_t J = 1;  // local samples per node
  std::int64_t T = 1;  // total iterations
  std::size_t d = 1;   // model dimension
  // false: no noise is injected and the run is not private.
  bool enabled = true;
};

// T c2^2 G^2 ln(1/delta) / (J^2 epsilon^2). Throws ValidationError for
// epsilon <= 0, delta outside (0, 1), J < 1 or T < 1.
double SigmaSq(const PrivacySpec& spec);

// SigmaSq when enabled, 0 otherwise.
double EffectiveSigmaSq(const PrivacySpec& spec);

struct BudgetCheck {
  bool ok = true;
  double bound = 0.0;  // c1 T / J^2
  std::string reason;  // empty when ok
};

// The noise calibration is only proven for epsilon < c1 T / J^2. Outside that
// range this reports a warning; callers proceed with SigmaSq regardless.
BudgetCheck CheckBudgetAdmissible(const PrivacySpec& spec);

// g * min(1, G / ||g||). Clip(0) = 0.
Vector ClipGradient(std::span<const double> g, double G);
void ClipGradientInPlace(std::span<double> g, double G);

// d i.i.d. N(0, sigma_sq) draws. sigma_sq == 0 yields zeros and consumes no
// randomness.
Vector DrawNoise(double sigma_sq, std::size_t d, Rng& rng);

}  // namespace pushsim

#endif  // PUSHSIM_PRIVACY_H_
