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

#include "pushsim/schedule.h"

#include <algorithm>
#include <cmath>

#include "pushsim/error.h"
#include "pushsim/privacy.h"

namespace pushsim {

Schedule TheoreticalSchedule(const ScheduleInputs& in) {
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    throw ValidationError("delta must lie in (0, 1)");
  }
  if (!(in.epsilon > 0.0) || in.J < 1 || in.n < 1 || in.d < 1 ||
      !(in.c2 > 0.0) || !(in.L > 0.0) || !(in.G > 0.0)) {
    throw ValidationError("schedule inputs must be positive");
  }
  const double log_inv_delta = std::log(1.0 / in.delta);
  const double j = static_cast<double>(in.J);
  const double d = static_cast<double>(in.d);

  Schedule s;
  const double horizon =
      j * j * in.epsilon * in.epsilon / (in.c2 * in.c2 * d * log_inv_delta);
  s.T = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::min(std::floor(horizon), 9e18)));
  s.eta = 1.0 / (j * in.epsilon /
                     (in.c2 * std::sqrt(in.n * d * log_inv_delta)) +
                 in.L);

  PrivacySpec privacy;
  privacy.epsilon = in.epsilon;
  privacy.delta = in.delta;
  privacy.clip_G = in.G;
  privacy.c1 = in.c1;
  privacy.c2 = in.c2;
  privacy.J = in.J;
  privacy.T = s.T;
  privacy.d = in.d;
  s.sigma_sq = SigmaSq(privacy);

  s.j_required = in.c2 * std::sqrt(d * log_inv_delta) *
                 std::pow(static_cast<double>(in.n), 2.5) / in.epsilon;
  s.j_condition = j >= s.j_required;
  const BudgetCheck budget = CheckBudgetAdmissible(privacy);
  s.epsilon_condition = budget.ok;
  s.epsilon_bound = budget.bound;
  return s;
}

}  // namespace pushsim
