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

#include "pushsim/diagnostics.h"

#include <cmath>
#include <limits>

#include "pushsim/engine.h"

namespace pushsim {

OmegaCheck CheckOmegaAdmissible(double omega_sq,
                                const SpectralConstants& constants) {
  OmegaCheck check;
  check.omega_sq = omega_sq;
  check.rho = omega_sq * (1.0 + constants.gamma * constants.gamma);
  const double gap = 1.0 - constants.lambda;
  check.threshold =
      1.0 / (10.0 + 40.0 * constants.C * constants.C / (gap * gap));
  check.ratio = check.rho / check.threshold;
  check.ok = check.rho <= check.threshold;
  return check;
}

OmegaCheck CheckOmegaAdmissible(const CompressorSpec& spec,
                                const SpectralConstants& constants) {
  return CheckOmegaAdmissible(OmegaSq(spec), constants);
}

double Zeta(const ErrorFeedbackInputs& in) {
  const double energy =
      in.n * (in.G * in.G + static_cast<double>(in.d) * in.sigma_sq);
  const double gap = 1.0 - in.lambda;
  return 10.0 * in.rho * (energy + 4.0 * in.C * in.C * energy / (gap * gap));
}

ErrorFeedbackReport ErrorFeedbackDiagnostic(std::span<const RunRecord> records,
                                            const ErrorFeedbackInputs& in) {
  ErrorFeedbackReport report;
  report.zeta = Zeta(in);
  report.bound = report.zeta * in.eta * in.eta;
  bool first = true;
  for (const RunRecord& r : records) {
    double ratio = 0.0;
    if (r.U_t > 0.0) {
      ratio = report.bound > 0.0 ? r.U_t / report.bound
                                 : std::numeric_limits<double>::infinity();
    }
    if (first || ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.worst_t = r.t;
      first = false;
    }
    if (ratio > 1.0 && !report.first_violation_t) {
      report.first_violation_t = r.t;
    }
  }
  return report;
}

}  // namespace pushsim
