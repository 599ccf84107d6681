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

#ifndef PUSHSIM_DIAGNOSTICS_H_
#define PUSHSIM_DIAGNOSTICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "pushsim/compression.h"
#include "pushsim/topology.h"

namespace pushsim {

struct RunRecord;

// Compression admissibility: rho = omega^2 (1 + gamma^2) must not exceed
// (10 + 40 C^2 / (1 - lambda)^2)^-1. The boundary counts as admissible.
struct OmegaCheck {
  bool ok = true;
  double omega_sq = 0.0;
  double rho = 0.0;
  double threshold = 0.0;
  double ratio = 0.0;  // rho / threshold
};

OmegaCheck CheckOmegaAdmissible(double omega_sq,
                                const SpectralConstants& constants);
OmegaCheck CheckOmegaAdmissible(const CompressorSpec& spec,
                                const SpectralConstants& constants);

struct ErrorFeedbackInputs {
  double rho = 0.0;
  int n = 1;
  double G = 1.0;
  std::size_t d = 1;
  double sigma_sq = 0.0;
  double C = 1.0;
  double lambda = 0.0;
  double eta = 0.0;
};

// zeta = 10 rho (n (G^2 + d sigma^2) + 4 C^2 n (G^2 + d sigma^2) / (1 - lambda)^2)
double Zeta(const ErrorFeedbackInputs& in);

// Per-trajectory check of the expected-value bound U^t <= zeta eta^2.
struct ErrorFeedbackReport {
  double zeta = 0.0;
  double bound = 0.0;      // zeta * eta^2
  double max_ratio = 0.0;  // max_t U^t / bound, 0 when U^t == 0 throughout
  std::int64_t worst_t = 0;
  std::optional<std::int64_t> first_violation_t;
  bool within_bound() const { return !first_violation_t.has_value(); }
};

ErrorFeedbackReport ErrorFeedbackDiagnostic(std::span<const RunRecord> records,
                                            const ErrorFeedbackInputs& in);

}  // namespace pushsim

#endif  // PUSHSIM_DIAGNOSTICS_H_
